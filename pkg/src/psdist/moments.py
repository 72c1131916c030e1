"""Exact moment and cumulant polynomials of the mean-parameterized family.

Every quantity is a polynomial in the mean x. The recurrences come from
differentiating the generating-function equations in z at z = 0:

    raw        alpha_{m+1} = x alpha_m + v alpha_m'
    central    mu_{m+1}    = v (mu_m' + m mu_{m-1})
    cumulant   chi_{m+1}   = v chi_m'

The central-moment form places v over both terms. The variant with
``m mu_{m-1}`` outside the factor is kept as
:func:`central_moment_printed`; it already fails at mu_2 (it gives 1).
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .polynomial import Polynomial, X

MAX_ORDER = 12

V = Polynomial([0, 1, 6, 8])
DV = V.derivative()


class Kind(str, enum.Enum):
    RAW = "raw"
    CENTRAL = "central"
    CUMULANT = "cumulant"


@dataclass(frozen=True)
class MomentPolynomial:
    kind: Kind
    order: int
    poly: Polynomial

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return self.poly.coeffs

    @property
    def degree(self) -> int:
        return self.poly.degree

    def __str__(self) -> str:
        return str(self.poly)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "order": self.order, "coeffs": self.poly.to_pairs()}

    @classmethod
    def from_json(cls, obj: dict) -> "MomentPolynomial":
        return cls(Kind(obj["kind"]), int(obj["order"]), Polynomial.from_pairs(obj["coeffs"]))


def variance_polynomial() -> Polynomial:
    """``v(x) = x(2x+1)(4x+1) = 8x^3 + 6x^2 + x``."""
    return V


def poly_derivative(p) -> Polynomial:
    if isinstance(p, MomentPolynomial):
        p = p.poly
    return p.derivative()


class _Table:
    # Same contract as the coefficient cache: lock-free reads, locked growth.
    def __init__(self, seed: list[Polynomial], step) -> None:
        self._items = seed
        self._step = step
        self._lock = threading.Lock()

    def get(self, m: int) -> Polynomial:
        if m < len(self._items):
            return self._items[m]
        with self._lock:
            while len(self._items) <= m:
                self._items.append(self._step(self._items))
        return self._items[m]


def _raw_step(items: list[Polynomial]) -> Polynomial:
    a = items[-1]
    return X * a + V * a.derivative()


def _central_step(items: list[Polynomial]) -> Polynomial:
    m = len(items) - 1
    return V * (items[m].derivative() + m * items[m - 1])


def _central_printed_step(items: list[Polynomial]) -> Polynomial:
    m = len(items) - 1
    return m * items[m - 1] + V * items[m].derivative()


def _cumulant_step(items: list[Polynomial]) -> Polynomial:
    return V * items[-1].derivative()


_RAW = _Table([Polynomial([1]), X], _raw_step)
_CENTRAL = _Table([Polynomial([1]), Polynomial()], _central_step)
_CENTRAL_PRINTED = _Table([Polynomial([1]), Polynomial()], _central_printed_step)
# index 0 is a placeholder; cumulants start at order 1
_CUMULANT = _Table([Polynomial(), X], _cumulant_step)


def _check_order(m: int, lowest: int = 0) -> int:
    if isinstance(m, bool) or not isinstance(m, int):
        raise TypeError("order must be an int")
    if m < lowest:
        raise ValueError(f"order must be >= {lowest}, got {m}")
    return m


def raw_moment(m: int) -> MomentPolynomial:
    _check_order(m)
    return MomentPolynomial(Kind.RAW, m, _RAW.get(m))


def central_moment(m: int) -> MomentPolynomial:
    _check_order(m)
    return MomentPolynomial(Kind.CENTRAL, m, _CENTRAL.get(m))


def central_moment_printed(m: int) -> MomentPolynomial:
    """Diagnostic: ``mu_{m+1} = m mu_{m-1} + v mu_m'`` taken literally."""
    _check_order(m)
    return MomentPolynomial(Kind.CENTRAL, m, _CENTRAL_PRINTED.get(m))


def cumulant(m: int) -> MomentPolynomial:
    _check_order(m, 1)
    return MomentPolynomial(Kind.CUMULANT, m, _CUMULANT.get(m))


def moment(kind: Kind | str, m: int) -> MomentPolynomial:
    kind = Kind(kind)
    if kind is Kind.RAW:
        return raw_moment(m)
    if kind is Kind.CENTRAL:
        return central_moment(m)
    return cumulant(m)


def central_from_raw(m: int) -> MomentPolynomial:
    """Binomial transform ``sum_j C(m,j) (-1)^(m-j) alpha_j x^(m-j)``."""
    _check_order(m)
    total = Polynomial()
    for j in range(m + 1):
        sign = -1 if (m - j) % 2 else 1
        total = total + sign * comb(m, j) * raw_moment(j).poly * X ** (m - j)
    return MomentPolynomial(Kind.CENTRAL, m, total)


def cumulants_from_raw(m: int) -> MomentPolynomial:
    """Classical recursion ``chi_n = alpha_n - sum_{j<n} C(n-1, j-1) chi_j alpha_{n-j}``."""
    _check_order(m, 1)
    chi: list[Polynomial] = [Polynomial()]
    for n in range(1, m + 1):
        acc = raw_moment(n).poly
        for j in range(1, n):
            acc = acc - comb(n - 1, j - 1) * chi[j] * raw_moment(n - j).poly
        chi.append(acc)
    return MomentPolynomial(Kind.CUMULANT, m, chi[m])


def evaluate(p, x) -> float:
    """Value at ``x``; Horner in exact rationals, rounded once."""
    if isinstance(p, MomentPolynomial):
        p = p.poly
    return float(p(Fraction(x)))
