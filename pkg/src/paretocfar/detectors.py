"""Clairvoyant and GLRT detectors for a Pareto target in Pareto clutter.

Three detectors share one decision rule, ``statistic > threshold``:

* clairvoyant: clutter shape and scale known, the CUT value itself is the
  statistic (Neyman-Pearson upper bound on performance);
* case A: scale known, shape unknown; statistic
  ``u = n * ln(y/h) / sum ln(x_i/h)``;
* case B: shape and scale unknown; the scale is replaced by its MLE
  ``min(y, min x)`` and the statistic becomes
  ``ln(y/x_min) / mean ln(x_i/x_min)`` (zero when ``y <= x_min``).

Thresholds for a design false-alarm probability, and the detection
probability against a ``Pa(rho, h)`` target, are closed-form for all three.
The ``*_statistics`` functions are vectorised over trials and are what the
scalar operations and the Monte Carlo engine both call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    DegenerateSampleError,
    DomainError,
    InvalidParametersError,
    InvalidPfaError,
    SpecMismatchError,
)
from .pareto_model import ParetoParams, _log_reduce_unchecked, log_reduce

INF = math.inf


class DetectorKind(str, Enum):
    CLAIRVOYANT = "clairvoyant"
    CASE_A = "case-a"
    CASE_B = "case-b"


@dataclass(frozen=True)
class DetectionInput:
    """One CUT observation plus its reference window.

    ``known_scale`` is the clutter scale when the caller knows it (clairvoyant
    and case A); when given, every observation must be at least that large.
    """

    cut: float
    window: tuple
    known_scale: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cut", float(self.cut))
        object.__setattr__(self, "window", tuple(float(x) for x in self.window))
        if self.known_scale is not None:
            h = float(self.known_scale)
            if not h > 0:
                raise InvalidParametersError(f"known scale must be positive, got {h}")
            object.__setattr__(self, "known_scale", h)
            if self.cut < h or any(x < h for x in self.window):
                raise DomainError(f"observations must be >= known scale {h}")

    @property
    def n(self) -> int:
        return len(self.window)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.cut]), np.array([self.window], dtype=float).reshape(1, self.n)


@dataclass(frozen=True)
class DetectorSpec:
    """Detector kind, design false-alarm probability and window size.

    The clairvoyant detector needs both clutter parameters, case A needs the
    scale only and case B needs neither.
    """

    kind: DetectorKind
    design_pfa: float
    window_size: int
    known_shape: Optional[float] = None
    known_scale: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        if int(self.window_size) != self.window_size or self.window_size < 0:
            raise InvalidParametersError(f"window size must be a non-negative integer, got {self.window_size}")
        object.__setattr__(self, "window_size", int(self.window_size))
        # pfa = 1 is a valid clairvoyant design (threshold at the support edge)
        top_ok = self.design_pfa <= 1 if self.kind is DetectorKind.CLAIRVOYANT else self.design_pfa < 1
        if not (0 < self.design_pfa and top_ok):
            raise InvalidPfaError(f"design pfa {self.design_pfa} is outside the allowed range")
        if self.kind is DetectorKind.CLAIRVOYANT:
            if self.known_shape is None or self.known_scale is None:
                raise InvalidParametersError("clairvoyant detector needs clutter shape and scale")
            ParetoParams(self.known_shape, self.known_scale)
        elif self.kind is DetectorKind.CASE_A:
            if self.known_scale is None:
                raise InvalidParametersError("case-a detector needs the clutter scale")
            if not self.known_scale > 0:
                raise InvalidParametersError("known scale must be positive")
            if self.window_size < 1:
                raise InvalidParametersError("case-a detector needs n >= 1")
        else:
            if self.window_size < 2:
                raise InvalidParametersError("case-b detector needs n >= 2")
            bound = self.window_size / (self.window_size + 1.0)
            if not self.design_pfa < bound:
                raise InvalidPfaError(
                    f"case-b pfa must be below n/(n+1) = {bound:.6g}, got {self.design_pfa}"
                )

    @property
    def known_clutter(self) -> Optional[ParetoParams]:
        if self.known_shape is None or self.known_scale is None:
            return None
        return ParetoParams(self.known_shape, self.known_scale)

    def threshold(self) -> float:
        if self.kind is DetectorKind.CLAIRVOYANT:
            return clairvoyant_threshold(self.design_pfa, self.known_clutter)
        if self.kind is DetectorKind.CASE_A:
            return case_a_threshold(self.design_pfa, self.window_size)
        return case_b_threshold(self.design_pfa, self.window_size)

    def regime(self) -> dict:
        return threshold_regime(self)


@dataclass(frozen=True)
class Decision:
    target_present: bool
    statistic: float
    threshold: float


@dataclass(frozen=True)
class MleResult:
    alpha_hat: float
    rho_hat: float
    h_hat: Optional[float] = None
    boundary: bool = False
    log_cut: float = field(default=0.0, repr=False)
    log_window: float = field(default=0.0, repr=False)


# --- closed forms ---------------------------------------------------------


def _check_open_pfa(pfa: float) -> None:
    if not 0 < pfa < 1:
        raise InvalidPfaError(f"pfa must lie in (0, 1), got {pfa}")


def _check_shapes(alpha: float, rho: float) -> None:
    if not (alpha > 0 and rho > 0):
        raise InvalidParametersError("shape parameters must be positive")
    if rho > alpha:
        raise InvalidParametersError(f"target shape rho={rho} exceeds clutter shape alpha={alpha}")


def clairvoyant_threshold(pfa: float, clutter: ParetoParams) -> float:
    """Threshold on the CUT value giving false-alarm probability `pfa`."""
    if not 0 < pfa <= 1:
        raise InvalidPfaError(f"pfa must lie in (0, 1], got {pfa}")
    return clutter.scale * pfa ** (-1.0 / clutter.shape)


def clairvoyant_pfa(threshold: float, clutter: ParetoParams) -> float:
    return float((clutter.scale / max(threshold, clutter.scale)) ** clutter.shape)


def clairvoyant_pd(pfa: float, alpha: float, rho: float) -> float:
    """Detection probability of the clairvoyant detector: ``pfa ** (rho/alpha)``."""
    if not 0 < pfa <= 1:
        raise InvalidPfaError(f"pfa must lie in (0, 1], got {pfa}")
    _check_shapes(alpha, rho)
    return pfa ** (rho / alpha)


def case_a_threshold(pfa: float, n: int) -> float:
    """Threshold on ``u`` for the known-scale GLRT; free of the clutter shape."""
    _check_open_pfa(pfa)
    if n < 1:
        raise InvalidParametersError("case-a needs n >= 1")
    return n * math.expm1(-math.log(pfa) / n)


def case_a_pfa(threshold: float, n: int) -> float:
    """False-alarm probability ``(1 + threshold/n) ** -n`` of the case-A test."""
    return math.exp(-n * math.log1p(threshold / n))


def case_a_pd(pfa: float, n: int, alpha: float, rho: float) -> float:
    _check_shapes(alpha, rho)
    gamma = case_a_threshold(pfa, n)
    return math.exp(-n * math.log1p(rho * gamma / (alpha * n)))


def case_b_threshold(pfa: float, n: int) -> float:
    """Threshold for the unknown-scale GLRT.

    Requires ``pfa < n/(n+1)``: even a zero threshold only fires when the CUT
    exceeds the window minimum, which happens with probability ``n/(n+1)``.
    """
    if n < 2:
        raise InvalidParametersError("case-b needs n >= 2")
    bound = n / (n + 1.0)
    if not 0 < pfa < bound:
        raise InvalidPfaError(f"case-b pfa must lie in (0, n/(n+1) = {bound:.6g}), got {pfa}")
    return n * math.expm1((math.log1p(1.0 / n) + math.log(pfa)) / (1.0 - n))


def case_b_pfa(threshold: float, n: int) -> float:
    return n / (n + 1.0) * math.exp(-(n - 1) * math.log1p(threshold / n))


def case_b_pd(pfa: float, n: int, alpha: float, rho: float) -> float:
    _check_shapes(alpha, rho)
    gamma = case_b_threshold(pfa, n)
    na = n * alpha
    return na / (rho + na) * math.exp(-(n - 1) * math.log1p(rho * gamma / na))


def closed_form_pd(spec: DetectorSpec, alpha: float, rho: float) -> float:
    """Theoretical detection probability of `spec` against ``Pa(rho, h)`` in ``Pa(alpha, h)``."""
    if spec.kind is DetectorKind.CLAIRVOYANT:
        return clairvoyant_pd(spec.design_pfa, alpha, rho)
    if spec.kind is DetectorKind.CASE_A:
        return case_a_pd(spec.design_pfa, spec.window_size, alpha, rho)
    return case_b_pd(spec.design_pfa, spec.window_size, alpha, rho)


def threshold_regime(spec: DetectorSpec) -> dict:
    """Flags describing where a design pfa sits relative to the derivation.

    Case A is exact for ``threshold > 1``, i.e. ``pfa < (1 + 1/n) ** -n``;
    larger pfa still use ``u > threshold`` but are flagged.  Case B reports
    whether the threshold exceeds one, which is descriptive only.
    """
    n = spec.window_size
    gamma = spec.threshold()
    if spec.kind is DetectorKind.CASE_A:
        bound = (1.0 + 1.0 / n) ** (-n)
        return {"threshold": gamma, "exact_regime": gamma > 1.0, "exact_pfa_bound": bound}
    if spec.kind is DetectorKind.CASE_B:
        return {"threshold": gamma, "threshold_above_one": gamma > 1.0, "pfa_upper_bound": n / (n + 1.0)}
    return {"threshold": gamma}


# --- statistics -----------------------------------------------------------


def case_a_statistics(cut: np.ndarray, window: np.ndarray, h: float) -> np.ndarray:
    """Vectorised ``u`` for cuts of shape ``(m,)`` and windows ``(m, n)``.

    Inputs are assumed to be ``>= h``; :func:`case_a_statistic` validates.
    """
    n = window.shape[-1]
    ly = _log_reduce_unchecked(cut, np.float64(h))
    lx = _log_reduce_unchecked(window, np.float64(h)).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = n * ly / lx
    u = np.where(lx == 0, INF, u)
    return np.where(ly == 0, 0.0, u)


def case_b_statistics(cut: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Vectorised unknown-scale statistic; zero wherever ``cut <= min(window)``."""
    n = window.shape[-1]
    xmin = window.min(axis=-1)
    above = cut > xmin
    num = _log_reduce_unchecked(np.where(above, cut, xmin), xmin)
    den = _log_reduce_unchecked(window, xmin[..., None]).sum(axis=-1) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = num / den
    stat = np.where(den == 0, INF, stat)
    return np.where(above, stat, 0.0)


def _window_array(inp: DetectionInput) -> tuple[np.ndarray, np.ndarray]:
    if inp.n == 0:
        raise InvalidParametersError("reference window is empty")
    return inp.as_arrays()


def case_a_statistic(inp: DetectionInput) -> float:
    """``n * ln(y/h) / sum ln(x_i/h)``; ``inf`` if the window sits at ``h`` and ``y`` does not."""
    if inp.known_scale is None:
        raise SpecMismatchError("case-a statistic needs the known clutter scale")
    cut, window = _window_array(inp)
    return float(case_a_statistics(cut, window, inp.known_scale)[0])


def case_b_statistic(inp: DetectionInput) -> float:
    if inp.n < 2:
        raise InvalidParametersError("case-b statistic needs n >= 2")
    if not inp.cut > 0 or any(not x > 0 for x in inp.window):
        raise DomainError("case-b observations must be positive")
    cut, window = _window_array(inp)
    return float(case_b_statistics(cut, window)[0])


def detect(spec: DetectorSpec, inp: DetectionInput) -> Decision:
    """Apply `spec` to one observation set and return the decision."""
    if spec.kind is DetectorKind.CLAIRVOYANT:
        if inp.known_scale is not None and inp.known_scale != spec.known_scale:
            raise SpecMismatchError("input scale differs from the detector's clutter scale")
        stat = inp.cut
        thr = spec.threshold()
    else:
        if inp.n != spec.window_size:
            raise SpecMismatchError(f"window has {inp.n} cells, detector expects {spec.window_size}")
        if spec.kind is DetectorKind.CASE_A:
            if inp.known_scale is None:
                inp = DetectionInput(inp.cut, inp.window, spec.known_scale)
            elif inp.known_scale != spec.known_scale:
                raise SpecMismatchError("input scale differs from the detector's known scale")
            stat = case_a_statistic(inp)
        else:
            stat = case_b_statistic(inp)
        thr = spec.threshold()
    return Decision(bool(stat > thr), stat, thr)


# --- maximum likelihood ---------------------------------------------------


def _mle_from_logs(ly: float, lx: float, n: int, h_hat: Optional[float]) -> MleResult:
    if ly + lx == 0:
        raise DegenerateSampleError("all observations sit at the scale; likelihood is unbounded")
    if lx == 0:
        raise DegenerateSampleError("reference window sits at the scale; clutter shape estimate is unbounded")
    rho_free = 1.0 / ly if ly > 0 else INF
    alpha_free = n / lx
    if rho_free < alpha_free:
        return MleResult(alpha_free, rho_free, h_hat, False, ly, lx)
    pooled = (n + 1) / (ly + lx)
    return MleResult(pooled, pooled, h_hat, True, ly, lx)


def mle_case_a(inp: DetectionInput) -> MleResult:
    """Constrained MLE of ``(alpha, rho)`` with ``rho <= alpha`` and known scale.

    The unconstrained stationary point is used when it satisfies the
    constraint, otherwise the optimum is on ``rho == alpha`` and the pooled
    estimate over all ``n + 1`` cells is returned with ``boundary=True``.
    """
    if inp.known_scale is None:
        raise SpecMismatchError("case-a MLE needs the known clutter scale")
    if inp.n < 1:
        raise InvalidParametersError("case-a MLE needs n >= 1")
    h = inp.known_scale
    ly = log_reduce(inp.cut, h)
    lx = math.fsum(log_reduce(np.asarray(inp.window), h))
    return _mle_from_logs(ly, lx, inp.n, None)


def mle_case_b(inp: DetectionInput) -> MleResult:
    """MLE of ``(alpha, rho, h)``; the scale estimate is ``min(y, min x)``."""
    if inp.n < 2:
        raise InvalidParametersError("case-b MLE needs n >= 2")
    if not inp.cut > 0 or any(not x > 0 for x in inp.window):
        raise DomainError("case-b observations must be positive")
    h_hat = min(inp.cut, min(inp.window))
    ly = log_reduce(inp.cut, h_hat)
    lx = math.fsum(log_reduce(np.asarray(inp.window), h_hat))
    return _mle_from_logs(ly, lx, inp.n, h_hat)


def log_likelihood(alpha: float, rho: float, inp: DetectionInput, h: float) -> float:
    """Joint log-likelihood of CUT ``Pa(rho, h)`` and window ``Pa(alpha, h)``."""
    n = inp.n
    log_h = math.log(h)
    log_y = math.log(inp.cut)
    sum_log_x = math.fsum(math.log(x) for x in inp.window)
    return math.fsum(
        [
            n * math.log(alpha),
            math.log(rho),
            (n * alpha + rho) * log_h,
            -(rho + 1.0) * log_y,
            -(alpha + 1.0) * sum_log_x,
        ]
    )


def simplified_likelihood_ratio(u: float, n: int) -> float:
    """``(n+1)^(n+1) * u / (u + n)^(n+1)``, decreasing in ``u`` for ``u > 1``."""
    if u <= 0:
        return 0.0
    if math.isinf(u):
        return 0.0
    return math.exp((n + 1) * math.log(n + 1.0) + math.log(u) - (n + 1) * math.log(u + n))


def raw_likelihood_ratio_case_a(inp: DetectionInput) -> float:
    """Generalised likelihood ratio by direct substitution of the MLEs.

    Evaluates the ratio of the maximised likelihoods under ``rho == alpha`` and
    under ``rho <= alpha`` without any algebraic simplification.  Returns 1
    when the constrained optimum is on the boundary.
    """
    mle = mle_case_a(inp)
    if mle.boundary:
        return 1.0
    h = inp.known_scale
    pooled = (inp.n + 1) / (mle.log_cut + mle.log_window)
    num = log_likelihood(pooled, pooled, inp, h)
    den = log_likelihood(mle.alpha_hat, mle.rho_hat, inp, h)
    return math.exp(num - den)

