"""Generic power series distributions ``p_k(y) = a_k y^k / w(y)``.

Families here work at float precision. The registry holds the three
textbook cases (Bernoulli, Poisson, geometric) and the flagship series,
which is the only one with exact coefficients behind it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy.optimize import brentq

from . import series

__all__ = [
    "PowerSeriesFamily",
    "YParamState",
    "TruncatedSum",
    "pmf_y",
    "mean_y",
    "variance_y",
    "truncated_sum",
    "y_for_mean",
    "variance_function",
    "example_registry",
    "get_family",
    "probe_points",
]

MIN_TERMS = 50
SETTLE_RUN = 5
MAX_TERMS = 2_000_000


@dataclass(frozen=True)
class PowerSeriesFamily:
    name: str
    coefficient: Callable[[int], float]
    w: Callable[[float], float]
    radius: float
    dw: Optional[Callable[[float], float]] = None
    d2w: Optional[Callable[[float], float]] = None

    def contains(self, y: float) -> bool:
        return 0.0 < y < self.radius


@dataclass(frozen=True)
class YParamState:
    family: PowerSeriesFamily
    y: float

    def __post_init__(self) -> None:
        y = float(self.y)
        if not self.family.contains(y):
            raise ValueError(
                f"y={y!r} outside (0, {self.family.radius}) for family {self.family.name!r}"
            )
        object.__setattr__(self, "y", y)


def pmf_y(state: YParamState, k: int) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    fam = state.family
    a = fam.coefficient(k)
    if a == 0.0:
        return 0.0
    y = state.y
    log_term = math.log(a) + k * math.log(y) - math.log(fam.w(y))
    return math.exp(log_term)


def _dw(fam: PowerSeriesFamily, y: float) -> float:
    if fam.dw is not None:
        return fam.dw(y)
    h = y * 1e-6
    return (fam.w(y + h) - fam.w(y - h)) / (2 * h)


def mean_y(state: YParamState) -> float:
    """``y w'(y) / w(y)``."""
    fam, y = state.family, state.y
    return y * _dw(fam, y) / fam.w(y)


def variance_y(state: YParamState) -> float:
    """``y d/dy (mean)``; analytic when the family has w' and w''."""
    fam, y = state.family, state.y
    if fam.dw is not None and fam.d2w is not None:
        w, dw, d2w = fam.w(y), fam.dw(y), fam.d2w(y)
        g = dw / w
        return y * (g + y * (d2w / w - g * g))
    # wider outer step; the inner difference already carries ~eps/1e-6 noise
    h = y * 1e-4
    if not math.isinf(fam.radius):
        h = min(h, 0.5 * (fam.radius - y))
    up = mean_y(YParamState(fam, y + h))
    down = mean_y(YParamState(fam, y - h))
    return y * (up - down) / (2 * h)


@dataclass(frozen=True)
class TruncatedSum:
    value: float
    terms: int
    tail_estimate: float


def _ratio_bound(state: YParamState) -> float:
    # Settled pmf ratio tends to y/R (or to 0 when R is infinite).
    fam, y = state.family, state.y
    if math.isinf(fam.radius):
        return 0.5
    t = y / fam.radius
    return t + min(0.01, 0.5 * (1.0 - t))


def truncated_sum(
    state: YParamState,
    weight: Callable[[int], float] = lambda k: 1.0,
    tol: float = 1e-16,
) -> TruncatedSum:
    """Sum ``weight(k) pmf_y(k)`` with a geometric tail estimate.

    Terms are taken up to at least ``MIN_TERMS``; past that the sum stops
    once ``SETTLE_RUN`` consecutive term ratios sit below the ratio bound
    and the geometric tail that bound implies is under ``tol`` (absolute).
    Terms that vanish identically (finite families) end the sum directly.
    """
    rho = _ratio_bound(state)
    terms: list[float] = []
    settled = 0
    prev = None
    zeros = 0
    for k in range(MAX_TERMS):
        t = weight(k) * pmf_y(state, k)
        terms.append(t)
        if t == 0.0:
            zeros += 1
            if k >= MIN_TERMS and zeros >= SETTLE_RUN:
                return TruncatedSum(math.fsum(terms), k + 1, 0.0)
            prev = None
            continue
        zeros = 0
        if prev is not None and abs(t) <= rho * abs(prev):
            settled += 1
        else:
            settled = 0
        prev = t
        if k >= MIN_TERMS and settled >= SETTLE_RUN:
            tail = abs(t) * rho / (1.0 - rho)
            if tail < tol:
                return TruncatedSum(math.fsum(terms), k + 1, tail)
    raise RuntimeError(f"truncated sum did not settle within {MAX_TERMS} terms")


def y_for_mean(family: PowerSeriesFamily, x: float) -> float:
    """Invert the (strictly increasing) mean map by bracketing."""
    if x <= 0:
        raise ValueError("mean must be > 0")
    hi_limit = family.radius
    lo = 1e-300
    if math.isinf(hi_limit):
        hi = 1.0
        while mean_y(YParamState(family, hi)) < x:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError(f"mean {x} not attainable for {family.name!r}")
    else:
        hi = hi_limit * (1 - 1e-15)
        if mean_y(YParamState(family, hi)) < x:
            raise ValueError(f"mean {x} not attainable for {family.name!r}")
    f = lambda y: mean_y(YParamState(family, y)) - x
    return brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)


def variance_function(family: PowerSeriesFamily, x: float) -> float:
    """Variance at mean ``x``."""
    return variance_y(YParamState(family, y_for_mean(family, x)))


def probe_points(family: PowerSeriesFamily) -> tuple[float, float, float]:
    """Parameter probes at 0.1, 0.5 and 0.9 of the radius (10 stands in for infinity)."""
    scale = 10.0 if math.isinf(family.radius) else family.radius
    return (0.1 * scale, 0.5 * scale, 0.9 * scale)


def _bernoulli() -> PowerSeriesFamily:
    return PowerSeriesFamily(
        name="bernoulli",
        coefficient=lambda k: 1.0 if k <= 1 else 0.0,
        w=lambda y: 1.0 + y,
        radius=math.inf,
        dw=lambda y: 1.0,
        d2w=lambda y: 0.0,
    )


def _poisson() -> PowerSeriesFamily:
    return PowerSeriesFamily(
        name="poisson",
        coefficient=lambda k: math.exp(-math.lgamma(k + 1)),
        w=math.exp,
        radius=math.inf,
        dw=math.exp,
        d2w=math.exp,
    )


def _geometric() -> PowerSeriesFamily:
    # 1/(1-y) rather than (y-1)^-1 so that every a_k is nonnegative.
    return PowerSeriesFamily(
        name="geometric",
        coefficient=lambda k: 1.0,
        w=lambda y: 1.0 / (1.0 - y),
        radius=1.0,
        dw=lambda y: 1.0 / (1.0 - y) ** 2,
        d2w=lambda y: 2.0 / (1.0 - y) ** 3,
    )


def _flagship_coefficient(k: int) -> float:
    return series.coefficient(k).value


def _flagship() -> PowerSeriesFamily:
    return PowerSeriesFamily(
        name="flagship",
        coefficient=_flagship_coefficient,
        w=series.eval_w,
        radius=1.0,
        dw=series.eval_dw,
        d2w=series.eval_d2w,
    )


_REGISTRY = (_bernoulli(), _poisson(), _geometric(), _flagship())


def example_registry() -> list[PowerSeriesFamily]:
    return list(_REGISTRY)


def get_family(name: str) -> PowerSeriesFamily:
    for fam in _REGISTRY:
        if fam.name == name:
            return fam
    raise KeyError(f"unknown family {name!r}; choose from {[f.name for f in _REGISTRY]}")
