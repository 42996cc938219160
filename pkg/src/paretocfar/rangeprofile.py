"""Synthetic range profiles and sliding-window detection.

Layout around a cell under test at index ``i`` with ``half`` reference cells
and ``guard`` guard cells per side::

    [ leading ref | guard | CUT | guard | lagging ref ]

The reference window handed to a detector is the leading cells followed by
the lagging cells, each in index order.  Cells too close to either end for
a full window get no decision.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .detectors import (
    Decision,
    DetectionInput,
    DetectorKind,
    DetectorSpec,
    case_a_statistics,
    case_b_statistics,
)
from .errors import DomainError, InvalidParametersError, WindowTooLargeError
from .montecarlo import Seed, seed_repr
from .pareto_model import ParetoParams, open_uniform

DEFAULT_GUARD = 2
DEFAULT_HALF_WINDOW = 4


@dataclass(frozen=True)
class ProfileConfig:
    """Geometry, clutter law and planted targets of a synthetic profile.

    ``targets`` holds ``(cell_index, target_shape)`` pairs.  A target cell is
    drawn from ``Pa(target_shape, clutter.scale)`` in place of clutter.
    """

    cell_count: int
    clutter: ParetoParams
    targets: tuple = ()
    half_window: int = DEFAULT_HALF_WINDOW
    guard: int = DEFAULT_GUARD
    seed: Seed = 0

    def __post_init__(self) -> None:
        if self.cell_count < 1:
            raise InvalidParametersError("cell_count must be positive")
        if self.half_window < 1 or self.guard < 0:
            raise InvalidParametersError("half_window must be >= 1 and guard >= 0")
        targets = tuple((int(i), float(rho)) for i, rho in self.targets)
        object.__setattr__(self, "targets", targets)
        idx = [i for i, _ in targets]
        if len(set(idx)) != len(idx):
            raise InvalidParametersError("target indices must be distinct")
        for i, rho in targets:
            if not 0 <= i < self.cell_count:
                raise InvalidParametersError(f"target index {i} outside [0, {self.cell_count})")
            if not 0 < rho <= self.clutter.shape:
                raise InvalidParametersError(f"target shape {rho} must lie in (0, {self.clutter.shape}]")

    @property
    def window_size(self) -> int:
        return 2 * self.half_window

    def interfering_targets(self) -> list:
        """Pairs ``(i, j)`` where target ``j`` sits in the reference window of target ``i``."""
        lo, hi = self.guard + 1, self.guard + self.half_window
        idx = [i for i, _ in self.targets]
        ordered = sorted(idx)
        pairs = []
        for i in idx:
            start = bisect.bisect_left(ordered, i - hi)
            stop = bisect.bisect_right(ordered, i + hi)
            pairs.extend((i, j) for j in ordered[start:stop] if lo <= abs(i - j))
        order = {i: k for k, i in enumerate(idx)}
        return sorted(pairs, key=lambda p: (order[p[0]], order[p[1]]))

    def metadata(self) -> dict:
        return {
            "cell_count": self.cell_count,
            "clutter_shape": self.clutter.shape,
            "clutter_scale": self.clutter.scale,
            "half_window": self.half_window,
            "guard": self.guard,
            "seed": seed_repr(self.seed),
            "targets": [list(t) for t in self.targets],
            "interfering_targets": [list(p) for p in self.interfering_targets()],
        }


@dataclass(frozen=True)
class RangeProfile:
    intensity: np.ndarray
    is_target: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.intensity)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RangeProfile):
            return NotImplemented
        return (
            np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.is_target, other.is_target)
            and self.metadata == other.metadata
        )

    __hash__ = None


def generate_profile(config: ProfileConfig) -> RangeProfile:
    """Draw one profile; every cell is independent and the result is fixed by ``config.seed``."""
    pairs = config.interfering_targets()
    if pairs:
        warnings.warn(
            f"targets {pairs} fall inside each other's reference windows", RuntimeWarning, stacklevel=2
        )
    seed = config.seed
    entropy = int(seed) if isinstance(seed, (int, np.integer)) else [int(s) for s in seed]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
    shape = np.full(config.cell_count, config.clutter.shape)
    is_target = np.zeros(config.cell_count, dtype=bool)
    for i, rho in config.targets:
        shape[i] = rho
        is_target[i] = True
    u = open_uniform(rng, config.cell_count)
    intensity = config.clutter.scale * u ** (-1.0 / shape)
    return RangeProfile(intensity, is_target, config.metadata())


@dataclass(frozen=True)
class ProfileScan:
    """Detector output for every eligible cell of a profile.

    ``indices``, ``statistics`` and ``detections`` cover eligible cells only.
    """

    cell_count: int
    indices: np.ndarray
    statistics: np.ndarray
    threshold: float
    detections: np.ndarray
    metadata: dict = field(default_factory=dict)

    def decision(self, index: int) -> Optional[Decision]:
        pos = index - (int(self.indices[0]) if len(self.indices) else 0)
        if not len(self.indices) or not 0 <= pos < len(self.indices):
            return None
        return Decision(bool(self.detections[pos]), float(self.statistics[pos]), self.threshold)

    @property
    def decisions(self) -> list:
        return [self.decision(i) for i in range(self.cell_count)]

    def false_alarm_fraction(self, mask: Optional[np.ndarray] = None) -> float:
        det = self.detections if mask is None else self.detections[mask[self.indices]]
        return float(np.count_nonzero(det)) / len(det)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProfileScan):
            return NotImplemented
        return (
            self.cell_count == other.cell_count
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.statistics, other.statistics)
            and self.threshold == other.threshold
            and np.array_equal(self.detections, other.detections)
            and self.metadata == other.metadata
        )

    __hash__ = None


def _values(profile: Union[RangeProfile, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(profile, RangeProfile):
        return profile.intensity
    return np.asarray(profile, dtype=float)


def _half_window(spec: DetectorSpec) -> int:
    if spec.window_size % 2:
        raise InvalidParametersError("sliding-window scans need an even window size")
    return spec.window_size // 2


def assemble_input(
    profile, index: int, spec: DetectorSpec, guard: int = DEFAULT_GUARD
) -> DetectionInput:
    """Detection input for the CUT at `index` (leading cells, then lagging cells)."""
    x = _values(profile)
    half = _half_window(spec)
    lead = x[index - guard - half : index - guard]
    lag = x[index + guard + 1 : index + guard + 1 + half]
    if index - guard - half < 0 or len(lag) != half:
        raise WindowTooLargeError(f"cell {index} has no full window")
    scale = spec.known_scale if spec.kind is not DetectorKind.CASE_B else None
    return DetectionInput(float(x[index]), tuple(np.concatenate([lead, lag])), scale)


def scan_profile(profile, spec: DetectorSpec, guard: int = DEFAULT_GUARD) -> ProfileScan:
    """Slide `spec` along the profile and decide at every eligible cell."""
    x = _values(profile)
    half = _half_window(spec)
    if guard < 0:
        raise InvalidParametersError("guard must be non-negative")
    span = 2 * (half + guard) + 1
    if len(x) < span:
        raise WindowTooLargeError(f"profile of {len(x)} cells is shorter than the {span}-cell window")
    rows = sliding_window_view(x, span)
    cut = rows[:, half + guard]
    window = np.concatenate([rows[:, :half], rows[:, span - half :]], axis=1)
    if spec.kind is DetectorKind.CLAIRVOYANT:
        stat = cut.copy()
    elif spec.kind is DetectorKind.CASE_A:
        if np.any(x < spec.known_scale):
            raise DomainError(f"profile has cells below the known scale {spec.known_scale}")
        stat = case_a_statistics(cut, window, spec.known_scale)
    else:
        if np.any(~(x > 0)):
            raise DomainError("profile must be positive")
        stat = case_b_statistics(cut, window)
    threshold = spec.threshold()
    indices = np.arange(half + guard, half + guard + len(cut))
    meta = {
        "kind": spec.kind.value,
        "design_pfa": spec.design_pfa,
        "window_size": spec.window_size,
        "guard": guard,
    }
    return ProfileScan(len(x), indices, stat, threshold, stat > threshold, meta)
