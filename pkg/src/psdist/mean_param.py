"""The flagship distribution indexed by its mean x > 0.

Under the mean parameterization ``y(x) = 8x(2x+1)/(4x+1)^2`` and
``sqrt(1 - y(x)) = 1/(4x+1)``, so

    Pr(xi = k) = r_k y^k sqrt((2x+1)/(4x+1)),

with ``r_k`` the exact rational part of the k-th coefficient of w. The
probabilities are evaluated in log space for large k; ``r_k`` itself stays
of moderate size (``r_k ~ k^(-3/2)``), but its exact numerator and
denominator grow linearly in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .series import coefficient, _check_index

Real = Union[float, int, Fraction]

# k <= this uses the exact coefficient; above it the Stirling difference.
_EXACT_LOG_R_MAX = 64
# k <= this evaluates pmf directly; above it via exp(log_pmf).
DIRECT_PMF_MAX = 30

_HALF_LN_PI = 0.5 * math.log(math.pi)

__all__ = [
    "MeanParamDistribution",
    "SampleBatch",
    "y_of_x",
    "x_of_y",
    "one_minus_y",
    "variance_fn",
    "log_coefficient",
    "pmf",
    "log_pmf",
    "pmf_printed",
    "log_pmf_printed",
    "cdf",
    "quantile",
    "sample",
    "moment_sum",
    "compensated_cumsum",
]


def _check_x(x: Real) -> Real:
    if isinstance(x, Fraction):
        if x <= 0:
            raise ValueError(f"x must be > 0, got {x}")
        return x
    x = float(x)
    if not (x > 0.0) or math.isinf(x):
        raise ValueError(f"x must be a finite positive number, got {x!r}")
    return x


def y_of_x(x: Real) -> Real:
    """Return ``8x(2x+1)/(4x+1)^2``; exact when ``x`` is a Fraction."""
    x = _check_x(x)
    return 8 * x * (2 * x + 1) / (4 * x + 1) ** 2


def one_minus_y(x: Real) -> Real:
    """``1 - y(x) = (4x+1)^-2`` without cancellation."""
    x = _check_x(x)
    return 1 / (4 * x + 1) ** 2


def _rational_sqrt(q: Fraction) -> Fraction | None:
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def x_of_y(y: Real) -> Real:
    """Return ``(1 - sqrt(1-y)) / (4 sqrt(1-y))``, the mean at parameter y.

    Written as ``y / (4 s (1 + s))`` to avoid cancellation for small y. A
    Fraction input whose ``1 - y`` is a rational square gives an exact
    Fraction.
    """
    if isinstance(y, Fraction):
        if not (0 < y < 1):
            raise ValueError(f"y must satisfy 0 < y < 1, got {y}")
        s = _rational_sqrt(1 - y)
        if s is not None:
            return y / (4 * s * (1 + s))
        y = float(y)
    y = float(y)
    if not (0.0 < y < 1.0):
        raise ValueError(f"y must satisfy 0 < y < 1, got {y!r}")
    s = math.sqrt(1.0 - y)
    return y / (4.0 * s * (1.0 + s))


def variance_fn(x: Real) -> Real:
    """Variance as a function of the mean, ``x(2x+1)(4x+1)``."""
    x = _check_x(x)
    return x * (2 * x + 1) * (4 * x + 1)


def _stirling_correction(z: np.ndarray) -> np.ndarray:
    zi = 1.0 / z
    z2 = zi * zi
    return zi * (1 / 12 - z2 * (1 / 360 - z2 * (1 / 1260 - z2 * (1 / 1680 - z2 / 1188))))


def _log_r_large(k: np.ndarray) -> np.ndarray:
    # r_k = Gamma(n - 1/2) / (sqrt(pi) Gamma(n + 1)) with n = 2k + 1; the
    # leading Stirling terms of the two log-gammas cancel analytically.
    n = 2.0 * k + 1.0
    main = (n - 1.0) * np.log1p(-1.5 / (n + 1.0)) - 1.5 * np.log(n + 1.0) + 1.5
    return main + _stirling_correction(n - 0.5) - _stirling_correction(n + 1.0) - _HALF_LN_PI


_EXACT_LOG_R = None


def _exact_log_r() -> np.ndarray:
    global _EXACT_LOG_R
    if _EXACT_LOG_R is None:
        _EXACT_LOG_R = np.array(
            [math.log(coefficient(k).rational_part) for k in range(_EXACT_LOG_R_MAX + 1)]
        )
    return _EXACT_LOG_R


def log_coefficient(k) -> np.ndarray | float:
    """Natural log of ``r_k`` (scalar or array of k)."""
    scalar = np.isscalar(k)
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    if np.any(ks < 0):
        raise ValueError("k must be >= 0")
    out = np.empty(ks.shape, dtype=float)
    small = ks <= _EXACT_LOG_R_MAX
    out[small] = _exact_log_r()[ks[small]]
    out[~small] = _log_r_large(ks[~small].astype(float))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    seed: int
    x: float

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MeanParamDistribution:
    """The flagship power series distribution with mean ``x``."""

    x: float
    _exact_x: Fraction | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        x = _check_x(self.x)
        if isinstance(x, Fraction):
            object.__setattr__(self, "_exact_x", x)
            x = float(x)
        object.__setattr__(self, "x", x)

    @cached_property
    def y(self) -> float:
        return float(y_of_x(self._exact_x if self._exact_x is not None else self.x))

    @cached_property
    def sqrt_one_minus_y(self) -> float:
        return 1.0 / (4.0 * self.x + 1.0)

    @cached_property
    def log_y(self) -> float:
        if self.y < 0.5:
            return math.log(self.y)
        return math.log1p(-self.sqrt_one_minus_y**2)

    @cached_property
    def _log_p0(self) -> float:
        x = self.x
        return 0.5 * (math.log1p(2.0 * x) - math.log1p(4.0 * x))

    @property
    def mean(self) -> float:
        return self.x

    @property
    def variance(self) -> float:
        return variance_fn(self.x)

    # -- probabilities -------------------------------------------------

    def pmf(self, k: int) -> float:
        _check_index(k)
        if k > DIRECT_PMF_MAX:
            return math.exp(self.log_pmf(k))
        r = float(coefficient(k).rational_part)
        return r * self.y**k * math.exp(self._log_p0)

    def log_pmf(self, k: int) -> float:
        _check_index(k)
        return log_coefficient(k) + k * self.log_y + self._log_p0

    def log_pmf_range(self, start: int, stop: int) -> np.ndarray:
        """Vectorized ``log_pmf`` for ``k`` in ``range(start, stop)``."""
        ks = np.arange(start, stop, dtype=np.int64)
        return log_coefficient(ks) + ks * self.log_y + self._log_p0

    def pmf_range(self, start: int, stop: int) -> np.ndarray:
        return np.exp(self.log_pmf_range(start, stop))

    def pmf_printed(self, k: int) -> float:
        return math.exp(log_pmf_printed(k, self.x))

    def cdf(self, k: int) -> float:
        _check_index(k)
        return min(1.0, math.fsum(self.pmf_range(0, k + 1)))

    def tail_bound(self, k: int) -> float:
        """Bound on ``sum_{j > k} pmf(j)``; successive pmf ratios are below y."""
        y = self.y
        return self.pmf(k) * y / self.sqrt_one_minus_y**2

    # -- inversion -----------------------------------------------------

    def _cdf_table(self, u_max: float) -> np.ndarray:
        table = self.__dict__.get("_cdf_cache")
        if table is not None and (table[-1] >= u_max or self.__dict__["_cdf_done"]):
            return table
        chunk = 1024
        pieces: list[float] = []
        carry = (0.0, 0.0)
        start = 0
        done = False
        while True:
            p = self.pmf_range(start, start + chunk)
            sums, carry = compensated_cumsum(p.tolist(), carry)
            pieces.extend(sums)
            start += chunk
            last = float(p[-1])
            tail = last * self.y / self.sqrt_one_minus_y**2
            if tail < 1e-17:
                done = True
                break
            if pieces[-1] >= u_max and u_max < 1.0:
                break
            chunk *= 2
        table = np.minimum(np.array(pieces), 1.0)
        self.__dict__["_cdf_cache"] = table
        self.__dict__["_cdf_done"] = done
        return table

    def quantile(self, u: float) -> int:
        u = float(u)
        if not (0.0 <= u < 1.0):
            raise ValueError(f"u must satisfy 0 <= u < 1, got {u!r}")
        table = self._cdf_table(u)
        # Beyond the table the remaining mass is below float resolution.
        return int(min(np.searchsorted(table, u, side="left"), len(table) - 1))

    def sample(self, n: int, seed: int) -> SampleBatch:
        _check_index(n, "n")
        seed = _check_seed(seed)
        rng = np.random.default_rng(seed)
        u = rng.random(n)
        if n == 0:
            return SampleBatch(np.zeros(0, dtype=np.int64), seed, self.x)
        table = self._cdf_table(float(u.max()))
        idx = np.searchsorted(table, u, side="left")
        np.minimum(idx, len(table) - 1, out=idx)
        return SampleBatch(idx.astype(np.int64), seed, self.x)

    # -- truncated sums ------------------------------------------------

    def moment_sum(self, power: int, shift: float = 0.0, rel_tol: float = 1e-14) -> float:
        """``sum_k (k - shift)^power pmf(k)`` with a rigorous geometric tail.

        The stop index K must exceed ``shift + 1`` so the weight ratio
        ``((K+1-shift)/(K-shift))^power`` is decreasing; with the pmf ratio
        below y the tail is then below ``term_K q / (1 - q)``.
        """
        _check_index(power, "power")
        y = self.y
        parts: list[float] = []
        start = 0
        chunk = 256
        while True:
            ks = np.arange(start, start + chunk, dtype=float)
            terms = self.pmf_range(start, start + chunk)
            if power:
                terms = terms * (ks - shift) ** power
            parts.extend(terms.tolist())
            start += chunk
            kmax = start - 1
            if kmax > shift + 1:
                q = y * ((kmax + 1 - shift) / (kmax - shift)) ** power
                if q < 1.0:
                    tail = abs(terms[-1]) * q / (1.0 - q)
                    total = math.fsum(parts)
                    if tail <= rel_tol * abs(total) or tail == 0.0:
                        return total
            chunk = min(chunk * 2, 1 << 16)


def compensated_cumsum(values, carry: tuple[float, float] = (0.0, 0.0)):
    """Neumaier running sums; returns (sums, carry) so calls can be chained."""
    total, comp = carry
    out = []
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out.append(total + comp)
    return out, (total, comp)


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an int")
    seed = int(seed)
    if not (0 <= seed < 2**64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def log_pmf_printed(k: int, x: float) -> float:
    """Log of the displayed closed form

        C(4k+1, 2k) 2^-k x^k (2k+1)^(k+1/2) (4k+1)^(-2k-3/2).

    Kept verbatim for comparison; it is not a normalized pmf.
    """
    _check_index(k)
    x = float(_check_x(x))
    return (
        math.log(math.comb(4 * k + 1, 2 * k))
        - k * math.log(2.0)
        + k * math.log(x)
        + (k + 0.5) * math.log(2 * k + 1)
        - (2 * k + 1.5) * math.log(4 * k + 1)
    )


def pmf(k: int, x: Real) -> float:
    return MeanParamDistribution(x).pmf(k)


def log_pmf(k: int, x: Real) -> float:
    return MeanParamDistribution(x).log_pmf(k)


def pmf_printed(k: int, x: Real) -> float:
    return math.exp(log_pmf_printed(k, x))


def cdf(k: int, x: Real) -> float:
    return MeanParamDistribution(x).cdf(k)


def quantile(u: float, x: Real) -> int:
    return MeanParamDistribution(x).quantile(u)


def sample(n: int, x: Real, seed: int) -> SampleBatch:
    return MeanParamDistribution(x).sample(n, seed)


def moment_sum(x: Real, power: int, shift: float = 0.0, rel_tol: float = 1e-14) -> float:
    return MeanParamDistribution(x).moment_sum(power, shift, rel_tol)


def batch_mean_var(values: Sequence[int]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    return float(arr.mean()), float(arr.var())
