"""CFAR detection of Pareto-fluctuating targets in Pareto-distributed sea clutter.

Modules: :mod:`.pareto_model` (the clutter law and its log-domain reductions),
:mod:`.detectors` (clairvoyant and GLRT detectors with closed-form thresholds
and detection probabilities), :mod:`.montecarlo` (seeded, worker-count
independent simulation), :mod:`.rangeprofile` (synthetic profiles and
sliding-window scans), :mod:`.serialization` and :mod:`.cli`.
"""

from .detectors import (
    Decision,
    DetectionInput,
    DetectorKind,
    DetectorSpec,
    MleResult,
    case_a_pd,
    case_a_threshold,
    case_b_pd,
    case_b_threshold,
    clairvoyant_pd,
    clairvoyant_threshold,
    detect,
    mle_case_a,
    mle_case_b,
)
from .errors import (
    DegenerateSampleError,
    DomainError,
    InvalidParametersError,
    InvalidPfaError,
    SpecMismatchError,
    WindowTooLargeError,
)
from .montecarlo import (
    CurveSource,
    RocCurve,
    SweepResult,
    TrialEstimate,
    cfar_sweep,
    compare_to_clairvoyant,
    estimate_pd,
    estimate_pfa,
    roc_curve,
)
from .pareto_model import ParetoParams, sample_pareto
from .rangeprofile import ProfileConfig, ProfileScan, RangeProfile, generate_profile, scan_profile

__version__ = "0.1.0"
