"""Taylor coefficients of w(y) = (1 + sqrt(1 - y))**(-1/2).

The coefficients a_m are carried as ``r_m / sqrt(2)`` with ``r_m`` an exact
rational, so every symbolic comparison stays in :class:`fractions.Fraction`.
They come from the two binomial series of ``sqrt(1 +/- sqrt(y))``: only the
odd-index terms survive the difference, which gives ``r_m = 2 C(1/2, 2m+1)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

ExactRational = Fraction

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = math.sqrt(0.5)  # correctly rounded; 1/SQRT2 is one ulp low

__all__ = [
    "ExactRational",
    "SeriesCoefficient",
    "half_binomial",
    "coefficient",
    "coefficients",
    "printed_coefficient",
    "eval_w",
    "eval_dw",
    "eval_d2w",
    "partial_sum",
    "tail_bound",
]


@dataclass(frozen=True)
class SeriesCoefficient:
    """The m-th Taylor coefficient, ``a_m = rational_part / sqrt(2)``."""

    index: int
    rational_part: Fraction

    @property
    def value(self) -> float:
        return float(self.rational_part) * INV_SQRT2


def _check_index(k: int, name: str = "k") -> int:
    if isinstance(k, bool) or not isinstance(k, int):
        raise TypeError(f"{name} must be an int, got {type(k).__name__}")
    if k < 0:
        raise ValueError(f"{name} must be >= 0, got {k}")
    return k


def _check_unit_interval(y: float) -> float:
    y = float(y)
    if not (0.0 <= y < 1.0):
        raise ValueError(f"y must satisfy 0 <= y < 1, got {y!r}")
    return y


def half_binomial(k: int) -> Fraction:
    """Generalized binomial coefficient C(1/2, k) by the running product."""
    _check_index(k)
    half = Fraction(1, 2)
    value = Fraction(1)
    for j in range(1, k + 1):
        value = value * (half - j + 1) / j
    return value


class _CoefficientCache:
    # Readers index the list without locking; appends are serialized.
    def __init__(self) -> None:
        self._r = [Fraction(1)]
        self._lock = threading.Lock()

    def get(self, m: int) -> Fraction:
        table = self._r
        if m < len(table):
            return table[m]
        with self._lock:
            self._extend(m)
        return self._r[m]

    def table(self, max_m: int) -> list[Fraction]:
        self.get(max_m)
        return self._r[: max_m + 1]

    def _extend(self, m: int) -> None:
        table = self._r
        half = Fraction(1, 2)
        while len(table) <= m:
            j = len(table)
            # C(1/2, 2j+1) from C(1/2, 2j-1): two steps of the running product
            n = 2 * j - 1
            step = (half - n) / (n + 1) * (half - n - 1) / (n + 2)
            table.append(table[-1] * step)


_CACHE = _CoefficientCache()


def coefficient(m: int) -> SeriesCoefficient:
    """Return ``r_m`` with ``a_m = r_m / sqrt(2)`` the m-th coefficient of w.

    ``r_m = 2 C(1/2, 2m+1)``; the odd half-binomials are all positive, so
    no sign bookkeeping is needed.
    """
    _check_index(m, "m")
    return SeriesCoefficient(m, _CACHE.get(m))


def coefficients(max_m: int) -> list[Fraction]:
    """Exact rational parts ``r_0 .. r_max_m`` from the shared cache."""
    _check_index(max_m, "max_m")
    return list(_CACHE.table(max_m))


def printed_coefficient(m: int) -> Fraction:
    """Rational part of the displayed closed form (4m)! 16^-m / ((2m)! (2m+1)).

    Diagnostic only. It agrees with :func:`coefficient` at m = 0 and
    disagrees from m = 1 on (1/4 against 1/8).
    """
    _check_index(m, "m")
    return Fraction(math.factorial(4 * m), math.factorial(2 * m) * (2 * m + 1) * 16**m)


def eval_w(y: float) -> float:
    """Evaluate (1 + sqrt(1 - y))**(-1/2) for 0 <= y < 1."""
    y = _check_unit_interval(y)
    return (1.0 + math.sqrt(1.0 - y)) ** -0.5


def eval_dw(y: float) -> float:
    """First derivative ``w'(y) = (1 + s)**(-3/2) / (4 s)`` with s = sqrt(1 - y)."""
    y = _check_unit_interval(y)
    s = math.sqrt(1.0 - y)
    return (1.0 + s) ** -1.5 / (4.0 * s)


def eval_d2w(y: float) -> float:
    """Second derivative ``w''(y) = (1 + s)**(-5/2) (5 s + 2) / (16 s**3)``."""
    y = _check_unit_interval(y)
    s = math.sqrt(1.0 - y)
    return (1.0 + s) ** -2.5 * (5.0 * s + 2.0) / (16.0 * s**3)


def partial_sum(y: float, terms: int) -> float:
    """Sum of the first ``terms`` series terms, compensated with ``math.fsum``."""
    y = _check_unit_interval(y)
    _check_index(terms, "terms")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if y == 0.0:
        return INV_SQRT2
    r = _CACHE.table(terms - 1)
    acc = []
    power = 1.0
    for rm in r:
        acc.append(float(rm) * power)
        power *= y
        if power == 0.0:
            break
    return math.fsum(acc) * INV_SQRT2


def tail_bound(y: float, from_index: int) -> float:
    """Upper bound on ``sum_{m >= from_index} a_m y^m``.

    Valid because ``a_{m+1} / a_m < 1`` for every m, so the tail is below
    the geometric series started at ``a_from y^from``.
    """
    y = _check_unit_interval(y)
    _check_index(from_index, "from_index")
    if y == 0.0:
        return INV_SQRT2 if from_index == 0 else 0.0
    a = coefficient(from_index).value
    return a * y**from_index / (1.0 - y)
