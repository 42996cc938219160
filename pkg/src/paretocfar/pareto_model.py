"""Two-parameter Pareto law and the distributions derived from it.

Intensity in every range cell is modelled as ``Pa(shape, scale)`` with cdf
``1 - (scale / y) ** shape`` on ``[scale, inf)``.  Taking logs turns the
model into exponentials, which is what makes the detector thresholds
closed-form.  The :class:`DerivedLaw` family collects those log-domain
laws; they exist for test oracles and the validation report and are never
sampled from on the detection path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .errors import DomainError, InvalidParametersError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ParetoParams:
    """Shape (tail index) and scale (support lower bound) of a Pareto law."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise InvalidParametersError(f"Pareto shape must be positive, got {self.shape!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidParametersError(f"Pareto scale must be positive, got {self.scale!r}")


def pareto_cdf(y: ArrayLike, p: ParetoParams) -> ArrayLike:
    """Cumulative distribution of ``Pa(p.shape, p.scale)`` evaluated at `y`."""
    y_arr = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(y_arr >= p.scale, (p.scale / np.maximum(y_arr, p.scale)) ** p.shape, 1.0)
    out = 1.0 - tail
    return float(out) if out.ndim == 0 else out


def pareto_pdf(y: ArrayLike, p: ParetoParams) -> ArrayLike:
    """Density of ``Pa(p.shape, p.scale)``; zero below the scale."""
    y_arr = np.asarray(y, dtype=float)
    safe = np.maximum(y_arr, p.scale)
    dens = p.shape * p.scale**p.shape / safe ** (p.shape + 1.0)
    out = np.where(y_arr >= p.scale, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def pareto_from_uniform(u: ArrayLike, p: ParetoParams) -> ArrayLike:
    """Inverse-cdf map ``scale * u ** (-1/shape)`` for ``u`` in ``(0, 1]``."""
    out = p.scale * np.asarray(u, dtype=float) ** (-1.0 / p.shape)
    return float(out) if np.ndim(out) == 0 else out


def open_uniform(rng: np.random.Generator, size=None) -> ArrayLike:
    """Uniform draws that exclude zero.

    ``Generator.random`` samples ``[0, 1)``; reflecting gives ``(0, 1]``, so
    the inverse-cdf transform never divides by zero.
    """
    return 1.0 - rng.random(size)


def sample_pareto(p: ParetoParams, rng: np.random.Generator, size=None) -> ArrayLike:
    """Draw from ``Pa(p.shape, p.scale)`` by inverse-transform sampling."""
    return pareto_from_uniform(open_uniform(rng, size), p)


def log_reduce(value: ArrayLike, reference: ArrayLike) -> ArrayLike:
    """Return ``ln(value / reference)`` for ``value >= reference > 0``.

    Evaluated as ``log1p((value - reference) / reference)``, which keeps full
    relative precision for ratios close to one; when that quotient
    overflows the difference of logs is used instead.

    Raises
    ------
    DomainError
        If any ``reference <= 0`` or ``value < reference``.
    """
    v = np.asarray(value, dtype=float)
    r = np.asarray(reference, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("log_reduce reference must be positive")
    if np.any(~(v >= r)):
        raise DomainError("log_reduce requires value >= reference")
    out = _log_reduce_unchecked(v, r)
    return float(out) if np.ndim(out) == 0 else out


def _log_reduce_unchecked(v: np.ndarray, r: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        rel = (v - r) / r
        out = np.log1p(rel)
    overflow = ~np.isfinite(rel)
    if np.any(overflow):
        fallback = np.log(v) - np.log(r)
        out = np.where(overflow, fallback, out)
    return out


def g_density(g: ArrayLike, n: int, rate: float) -> ArrayLike:
    """Density of ``ln(Y/h) - ln(min(X)/h)`` under the clutter-only hypothesis.

    The two terms are independent exponentials with rates ``rate`` and
    ``n * rate``, so the difference is an asymmetric Laplace law.  At
    ``g == 0`` both one-sided limits coincide and that value is returned.
    """
    if n < 1:
        raise InvalidParametersError(f"window size must be >= 1, got {n}")
    if not rate > 0:
        raise InvalidParametersError(f"rate must be positive, got {rate}")
    g_arr = np.asarray(g, dtype=float)
    weight = n / (n + 1.0) * rate
    # clip the exponent so the unused branch cannot overflow
    pos = weight * np.exp(-rate * np.maximum(g_arr, 0.0))
    neg = weight * np.exp(n * rate * np.minimum(g_arr, 0.0))
    out = np.where(g_arr >= 0, pos, neg)
    return float(out) if out.ndim == 0 else out


# --- derived laws (test-side oracles) ------------------------------------


@dataclass(frozen=True)
class ExpRate:
    """Exponential law with the given rate; ``ln(Y/h)`` for ``Y ~ Pa(rate, h)``."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise InvalidParametersError("ExpRate.rate must be positive")

    @property
    def dist(self):
        return stats.expon(scale=1.0 / self.rate)

    def cdf(self, x):
        return self.dist.cdf(x)


@dataclass(frozen=True)
class GammaLaw:
    """Gamma law with integer shape count and a scale factor."""

    shape_count: int
    scale_factor: float

    def __post_init__(self) -> None:
        if int(self.shape_count) != self.shape_count or self.shape_count < 1:
            raise InvalidParametersError("GammaLaw.shape_count must be an integer >= 1")
        if not self.scale_factor > 0:
            raise InvalidParametersError("GammaLaw.scale_factor must be positive")

    @property
    def dist(self):
        return stats.gamma(a=self.shape_count, scale=self.scale_factor)

    def cdf(self, x):
        return self.dist.cdf(x)


@dataclass(frozen=True)
class ParetoMin:
    """Law of the minimum of a window: ``Pa(shape, scale)`` with shape already multiplied."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        ParetoParams(self.shape, self.scale)

    def cdf(self, x):
        return pareto_cdf(x, ParetoParams(self.shape, self.scale))


@dataclass(frozen=True)
class DiffExp:
    """Difference ``Exp(rate) - Exp(n * rate)`` of independent exponentials."""

    n: int
    rate: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParametersError("DiffExp.n must be an integer >= 1")
        if not self.rate > 0:
            raise InvalidParametersError("DiffExp.rate must be positive")

    def pdf(self, g):
        return g_density(g, self.n, self.rate)

    def cdf(self, g):
        g_arr = np.asarray(g, dtype=float)
        n, a = self.n, self.rate
        lower = np.exp(n * a * np.minimum(g_arr, 0.0)) / (n + 1.0)
        upper = 1.0 - n / (n + 1.0) * np.exp(-a * np.maximum(g_arr, 0.0))
        out = np.where(g_arr < 0, lower, upper)
        return float(out) if out.ndim == 0 else out


DerivedLaw = Union[ExpRate, GammaLaw, ParetoMin, DiffExp]


def log_cut_law(clutter: ParetoParams) -> ExpRate:
    """Law of ``ln(Y/h)`` for a clutter-only cell."""
    return ExpRate(clutter.shape)


def window_mean_log_law(clutter: ParetoParams, n: int) -> GammaLaw:
    """Law of ``(1/n) * sum ln(X_i/h)`` over an n-cell window."""
    return GammaLaw(n, 1.0 / (n * clutter.shape))


def window_min_law(clutter: ParetoParams, n: int) -> ParetoMin:
    """Law of the smallest of n iid clutter cells."""
    return ParetoMin(n * clutter.shape, clutter.scale)


def spread_about_min_law(clutter: ParetoParams, n: int) -> GammaLaw:
    """Law of ``(1/n) * sum ln(X_i / min X)``; independent of the minimum itself."""
    if n < 2:
        raise InvalidParametersError("spread about the minimum needs n >= 2")
    return GammaLaw(n - 1, 1.0 / (n * clutter.shape))
