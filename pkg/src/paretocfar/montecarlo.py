"""Monte Carlo estimation of false-alarm and detection probabilities.

Every trial draws a fresh reference window and a fresh CUT value.  Trials
are grouped into fixed-size blocks; block ``b`` of an experiment seeded
with ``seed`` gets its own generator built from ``SeedSequence(seed,
spawn_key=(b,))``, and trial ``t`` is row ``t mod BLOCK_SIZE`` of block
``t // BLOCK_SIZE``.  Randomness therefore depends on ``(seed, t)`` only and
the integer hit count is identical for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from .detectors import (
    DetectorKind,
    DetectorSpec,
    case_a_statistics,
    case_b_statistics,
    closed_form_pd,
)
from .errors import InvalidParametersError, InvalidPfaError, SpecMismatchError
from .pareto_model import ParetoParams, open_uniform, pareto_from_uniform

BLOCK_SIZE = 1 << 16
DEFAULT_TRIALS = 10**6
DESK_TRIAL_CAP = 10**7
MIN_EXPECTED_HITS = 100
CI_LEVEL = 0.99

Seed = Union[int, Sequence[int]]


class CurveSource(str, Enum):
    THEORY = "theory"
    SIMULATION = "simulation"


def wilson_interval(hits: int, trials: int, level: float = CI_LEVEL) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    p = hits / trials
    z2n = z * z / trials
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    lo = min(max(0.0, centre - half), p)
    hi = max(min(1.0, centre + half), p)
    return lo, hi


@dataclass(frozen=True)
class TrialEstimate:
    hits: int
    trials: int
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, hits: int, trials: int) -> "TrialEstimate":
        lo, hi = wilson_interval(hits, trials)
        return cls(int(hits), int(trials), lo, hi)

    @property
    def probability(self) -> float:
        return self.hits / self.trials

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


def allowed_misses(points: int, miss_rate: float, level: float = 0.01) -> int:
    """Upper ``1 - level`` quantile of the number of per-point misses among `points` independent checks."""
    return int(stats.binom.ppf(1.0 - level, points, miss_rate))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


def two_proportion_z(a: TrialEstimate, b: TrialEstimate) -> float:
    """Pooled two-proportion z statistic for ``a.probability - b.probability``."""
    pooled = (a.hits + b.hits) / (a.trials + b.trials)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / a.trials + 1.0 / b.trials))
    if se == 0:
        return 0.0
    return (a.probability - b.probability) / se


# --- trial engine -----------------------------------------------------------


def _entropy(seed: Seed) -> Union[int, list]:
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        return int(seed)
    return [int(s) for s in seed]


def seed_repr(seed: Seed):
    """JSON-friendly form of a seed."""
    return int(seed) if isinstance(seed, (int, np.integer)) else [int(s) for s in seed]


def child_seed(seed: Seed, index: int) -> tuple:
    """Seed for the `index`-th sub-experiment of an experiment seeded with `seed`."""
    base = (int(seed),) if isinstance(seed, (int, np.integer)) else tuple(int(s) for s in seed)
    return base + (int(index),)


def block_generator(seed: Seed, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.PCG64(ss))


def _block_hits(
    spec: DetectorSpec,
    clutter: ParetoParams,
    target: ParetoParams,
    seed: Seed,
    block: int,
    size: int,
) -> int:
    n = spec.window_size
    rng = block_generator(seed, block)
    u = open_uniform(rng, (size, n + 1))
    window = pareto_from_uniform(u[:, :n], clutter)
    cut = pareto_from_uniform(u[:, n], target)
    threshold = spec.threshold()
    if spec.kind is DetectorKind.CLAIRVOYANT:
        stat = cut
    elif spec.kind is DetectorKind.CASE_A:
        stat = case_a_statistics(cut, window, spec.known_scale)
    else:
        stat = case_b_statistics(cut, window)
    return int(np.count_nonzero(stat > threshold))


def count_hits(
    spec: DetectorSpec,
    clutter: ParetoParams,
    target: ParetoParams,
    trials: int,
    seed: Seed,
    workers: int = 1,
) -> int:
    """Number of trials in which `spec` declares a target.

    Window cells follow `clutter` and the CUT follows `target`.
    """
    blocks = [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(-(-trials // BLOCK_SIZE))]

    def run(item):
        return _block_hits(spec, clutter, target, seed, item[0], item[1])

    if workers <= 1 or len(blocks) == 1:
        return sum(map(run, blocks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(run, blocks))


def _check_trials(trials: int, full_scale: bool) -> None:
    if int(trials) != trials or trials < 1:
        raise InvalidParametersError(f"trials must be a positive integer, got {trials}")
    if trials > DESK_TRIAL_CAP and not full_scale:
        raise InvalidParametersError(
            f"{trials} trials exceeds the desk-scale cap of {DESK_TRIAL_CAP}; pass full_scale=True"
        )


def _check_spec_matches(spec: DetectorSpec, clutter: ParetoParams) -> None:
    if spec.kind is DetectorKind.CASE_A and spec.known_scale != clutter.scale:
        raise SpecMismatchError(
            f"case-a detector assumes scale {spec.known_scale}, clutter has {clutter.scale}"
        )
    if spec.kind is DetectorKind.CLAIRVOYANT and spec.known_clutter != clutter:
        raise SpecMismatchError("clairvoyant detector parameters differ from the clutter")


def estimate_pfa(
    spec: DetectorSpec,
    clutter: ParetoParams,
    trials: int,
    seed: Seed,
    workers: int = 1,
    full_scale: bool = False,
) -> TrialEstimate:
    """Empirical false-alarm probability with the CUT drawn from the clutter law."""
    _check_trials(trials, full_scale)
    _check_spec_matches(spec, clutter)
    hits = count_hits(spec, clutter, clutter, int(trials), seed, workers)
    return TrialEstimate.from_counts(hits, int(trials))


def estimate_pd(
    spec: DetectorSpec,
    clutter: ParetoParams,
    target: ParetoParams,
    trials: int,
    seed: Seed,
    workers: int = 1,
    full_scale: bool = False,
) -> TrialEstimate:
    """Empirical detection probability for a ``Pa(rho, h)`` CUT."""
    if target.shape > clutter.shape:
        raise InvalidParametersError("target shape must not exceed the clutter shape")
    if target.scale != clutter.scale:
        raise InvalidParametersError("target and clutter must share the scale")
    _check_trials(trials, full_scale)
    _check_spec_matches(spec, clutter)
    hits = count_hits(spec, clutter, target, int(trials), seed, workers)
    return TrialEstimate.from_counts(hits, int(trials))


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """Empirical pfa at each clutter-parameter point of a sweep.

    ``axis[i]`` is a tuple of ``(name, value)`` pairs describing point ``i``.
    """

    axis: tuple
    estimates: tuple
    nominal: float
    detector_kind: DetectorKind
    window_size: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.axis) != len(self.estimates):
            raise ValueError("sweep axis and estimates must align")

    def value(self, i: int, name: str) -> float:
        return dict(self.axis[i])[name]

    def ci_violations(self) -> int:
        return sum(not e.contains(self.nominal) for e in self.estimates)

    def max_relative_deviation(self) -> float:
        return max(abs(e.probability - self.nominal) / self.nominal for e in self.estimates)

    def allowed_ci_violations(self, level: float = 0.01) -> int:
        """Violation count a CFAR detector exceeds with probability below `level`.

        Each point's interval misses the nominal value with probability
        ``1 - CI_LEVEL``, so on a many-point sweep a few misses are expected.
        """
        return allowed_misses(len(self.estimates), 1.0 - CI_LEVEL, level)

    def flatness_z(self) -> float:
        """Two-proportion z between the largest and smallest estimate.

        A range statistic: on sweeps with many points it exceeds the 1%
        critical value far more often than 1% of the time for a flat
        detector.  :meth:`flatness_pvalue` is the calibrated alternative.
        """
        hi = max(self.estimates, key=lambda e: e.probability)
        lo = min(self.estimates, key=lambda e: e.probability)
        return two_proportion_z(hi, lo)

    def flatness_pvalue(self) -> float:
        """Chi-square homogeneity test of the hit counts across all points."""
        hits = np.array([e.hits for e in self.estimates], dtype=float)
        trials = np.array([e.trials for e in self.estimates], dtype=float)
        if len(hits) < 2 or hits.sum() == 0 or hits.sum() == trials.sum():
            return 1.0
        table = np.stack([hits, trials - hits])
        return float(stats.chi2_contingency(table, correction=False)[1])

    def is_flat(self, level: float = 0.01) -> bool:
        return self.flatness_pvalue() > level


def _check_min_pfa(pfa: float, trials: int) -> None:
    if pfa < MIN_EXPECTED_HITS / trials:
        raise InvalidPfaError(
            f"pfa {pfa:g} is below {MIN_EXPECTED_HITS}/trials = {MIN_EXPECTED_HITS / trials:g}; "
            "too few expected hits for a meaningful interval"
        )


def _specialise(spec: DetectorSpec, clutter: ParetoParams) -> DetectorSpec:
    if spec.kind is DetectorKind.CLAIRVOYANT:
        return replace(spec, known_shape=clutter.shape, known_scale=clutter.scale)
    if spec.kind is DetectorKind.CASE_A:
        return replace(spec, known_scale=clutter.scale)
    return spec


def cfar_sweep(
    spec: DetectorSpec,
    alpha_grid: Sequence[float],
    h_grid: Sequence[float],
    trials: int,
    seed: Seed,
    workers: int = 1,
    full_scale: bool = False,
) -> SweepResult:
    """Estimate pfa over the ``alpha_grid x h_grid`` clutter grid.

    Point ``i`` uses the seed ``child_seed(seed, i)``.  Detectors that know
    clutter parameters are told the grid point's values; case A therefore
    needs a single-valued `h_grid`.
    """
    alpha_grid, h_grid = list(alpha_grid), list(h_grid)
    if not alpha_grid or not h_grid:
        raise InvalidParametersError("sweep grids must be nonempty")
    if spec.kind is DetectorKind.CASE_A and len(h_grid) != 1:
        raise InvalidParametersError("case-a sweeps take a single known scale")
    _check_trials(trials, full_scale)
    _check_min_pfa(spec.design_pfa, trials)
    axis, estimates = [], []
    for i, (a, h) in enumerate((a, h) for a in alpha_grid for h in h_grid):
        clutter = ParetoParams(float(a), float(h))
        est = estimate_pfa(_specialise(spec, clutter), clutter, trials, child_seed(seed, i), workers, full_scale)
        axis.append((("alpha", float(a)), ("h", float(h))))
        estimates.append(est)
    meta = {"seed": seed_repr(seed), "trials": int(trials)}
    return SweepResult(tuple(axis), tuple(estimates), spec.design_pfa, spec.kind, spec.window_size, meta)


# --- ROC ------------------------------------------------------------------------


@dataclass(frozen=True)
class RocCurve:
    """Ordered ``(pfa, pd)`` points for one detector and parameter set.

    Simulation curves also carry the per-point :class:`TrialEstimate`.
    """

    points: tuple
    source: CurveSource
    detector_kind: DetectorKind
    window_size: int
    alpha: float
    rho: float
    h: float
    estimates: Optional[tuple] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        pfas = [p for p, _ in self.points]
        if any(b <= a for a, b in zip(pfas, pfas[1:])):
            raise ValueError("ROC pfa values must be strictly increasing")

    @property
    def pfa(self) -> list:
        return [p for p, _ in self.points]

    @property
    def pd(self) -> list:
        return [d for _, d in self.points]


def _check_pfa_grid(pfa_grid: Sequence[float]) -> list:
    grid = [float(p) for p in pfa_grid]
    if not grid:
        raise InvalidParametersError("pfa grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParametersError("pfa grid must be strictly increasing")
    return grid


def roc_curve(
    spec: DetectorSpec,
    clutter: ParetoParams,
    target: ParetoParams,
    pfa_grid: Sequence[float],
    mode: Union[CurveSource, str] = CurveSource.THEORY,
    trials: int = DEFAULT_TRIALS,
    seed: Seed = 0,
    workers: int = 1,
    full_scale: bool = False,
) -> RocCurve:
    """ROC of `spec` at each design pfa in `pfa_grid`.

    Theory mode evaluates the closed-form detection probability; simulation
    mode calls :func:`estimate_pd` per point with seed ``child_seed(seed, i)``.
    """
    mode = CurveSource(mode)
    grid = _check_pfa_grid(pfa_grid)
    specs = [_specialise(replace(spec, design_pfa=p), clutter) for p in grid]
    if mode is CurveSource.THEORY:
        pts = tuple((p, closed_form_pd(s, clutter.shape, target.shape)) for p, s in zip(grid, specs))
        return RocCurve(pts, mode, spec.kind, spec.window_size, clutter.shape, target.shape, clutter.scale)
    _check_trials(trials, full_scale)
    for p in grid:
        _check_min_pfa(p, trials)
    ests = tuple(
        estimate_pd(s, clutter, target, trials, child_seed(seed, i), workers, full_scale)
        for i, s in enumerate(specs)
    )
    pts = tuple((p, e.probability) for p, e in zip(grid, ests))
    meta = {"seed": seed_repr(seed), "trials": int(trials)}
    return RocCurve(pts, mode, spec.kind, spec.window_size, clutter.shape, target.shape, clutter.scale, ests, meta)


def roc_allowed_exceedances(points: int, k: float = 3.0, level: float = 0.01) -> int:
    """How many points of a correct ROC may exceed ``k`` sigma before the run is flagged."""
    return allowed_misses(points, 2.0 * stats.norm.sf(k), level)


def roc_agreement(theory: RocCurve, sim: RocCurve, k: float = 3.0) -> list:
    """Per-point ``|pd_sim - pd_theory| / sigma`` with the binomial sigma of the theory value."""
    out = []
    for (_, pt), est in zip(theory.points, sim.estimates):
        sigma = binomial_sigma(pt, est.trials)
        dev = abs(est.probability - pt)
        out.append(dev / sigma if sigma > 0 else (0.0 if dev == 0 else math.inf))
    return out


def compare_to_clairvoyant(
    n: int,
    clutter: ParetoParams,
    target: ParetoParams,
    pfa_grid: Sequence[float],
    trials: Optional[int] = None,
    seed: Seed = 0,
    workers: int = 1,
) -> list:
    """Clairvoyant bound alongside the case-A and case-B ROCs on one pfa grid.

    The clairvoyant curve is always theoretical.  The GLRT curves are
    theoretical unless `trials` is given.  Each GLRT curve records its pointwise
    shortfall from the bound under ``metadata["gap_to_clairvoyant"]``.
    """
    grid = _check_pfa_grid(pfa_grid)
    mode = CurveSource.THEORY if trials is None else CurveSource.SIMULATION
    trials = DEFAULT_TRIALS if trials is None else trials
    bound = roc_curve(
        DetectorSpec(DetectorKind.CLAIRVOYANT, grid[0], n, clutter.shape, clutter.scale),
        clutter, target, grid,
    )
    curves = [bound]
    for j, kind in enumerate((DetectorKind.CASE_A, DetectorKind.CASE_B)):
        scale = clutter.scale if kind is DetectorKind.CASE_A else None
        spec = DetectorSpec(kind, grid[0], n, known_scale=scale)
        curve = roc_curve(spec, clutter, target, grid, mode, trials, child_seed(seed, j), workers)
        gaps = [b - c for b, c in zip(bound.pd, curve.pd)]
        curves.append(replace(curve, metadata={**curve.metadata, "gap_to_clairvoyant": gaps}))
    return curves
