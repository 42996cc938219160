"""CSV and JSON serialisation of experiment results.

CSV headers are fixed::

    roc      pfa,pd_theory,pd_sim,ci_low,ci_high,trials
    sweep    alpha,h,pfa_nominal,pfa_emp,ci_low,ci_high,trials
    compare  pfa,pd_clairvoyant,pd_case_a,pd_case_b,gap_a,gap_b
    scan     index,statistic,threshold,decision
    profile  index,intensity,isTarget

Whatever a CSV cannot carry (detector kind, model parameters, seeds) goes to
a ``<file>.meta.json`` sidecar so every file reloads into the object that
produced it.  Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .detectors import DetectorKind
from .montecarlo import CurveSource, RocCurve, SweepResult, TrialEstimate
from .rangeprofile import ProfileScan, RangeProfile

ROC_HEADER = ["pfa", "pd_theory", "pd_sim", "ci_low", "ci_high", "trials"]
SWEEP_HEADER = ["alpha", "h", "pfa_nominal", "pfa_emp", "ci_low", "ci_high", "trials"]
COMPARE_HEADER = ["pfa", "pd_clairvoyant", "pd_case_a", "pd_case_b", "gap_a", "gap_b"]
SCAN_HEADER = ["index", "statistic", "threshold", "decision"]
PROFILE_HEADER = ["index", "intensity", "isTarget"]

PathLike = Union[str, Path]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _num(s: str) -> Optional[float]:
    return None if s == "" else float(s)


def sidecar_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".meta.json")


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- dict forms --------------------------------------------------------------


def estimate_to_dict(e: TrialEstimate) -> dict:
    return {"hits": e.hits, "trials": e.trials, "ci_low": e.ci_low, "ci_high": e.ci_high}


def estimate_from_dict(d: dict) -> TrialEstimate:
    return TrialEstimate(int(d["hits"]), int(d["trials"]), float(d["ci_low"]), float(d["ci_high"]))


def _meta_json(meta: dict) -> dict:
    # tuples become lists in JSON; normalise so reloaded objects compare equal
    return json.loads(json.dumps(meta))


def roc_to_dict(c: RocCurve) -> dict:
    return {
        "points": [list(p) for p in c.points],
        "source": c.source.value,
        "detector_kind": c.detector_kind.value,
        "window_size": c.window_size,
        "alpha": c.alpha,
        "rho": c.rho,
        "h": c.h,
        "estimates": None if c.estimates is None else [estimate_to_dict(e) for e in c.estimates],
        "metadata": _meta_json(c.metadata),
    }


def roc_from_dict(d: dict) -> RocCurve:
    ests = d.get("estimates")
    return RocCurve(
        tuple((float(p), float(q)) for p, q in d["points"]),
        CurveSource(d["source"]),
        DetectorKind(d["detector_kind"]),
        int(d["window_size"]),
        float(d["alpha"]),
        float(d["rho"]),
        float(d["h"]),
        None if ests is None else tuple(estimate_from_dict(e) for e in ests),
        d.get("metadata", {}),
    )


def sweep_to_dict(s: SweepResult) -> dict:
    return {
        "axis": [[list(kv) for kv in point] for point in s.axis],
        "estimates": [estimate_to_dict(e) for e in s.estimates],
        "nominal": s.nominal,
        "detector_kind": s.detector_kind.value,
        "window_size": s.window_size,
        "metadata": _meta_json(s.metadata),
    }


def sweep_from_dict(d: dict) -> SweepResult:
    axis = tuple(tuple((str(k), float(v)) for k, v in point) for point in d["axis"])
    return SweepResult(
        axis,
        tuple(estimate_from_dict(e) for e in d["estimates"]),
        float(d["nominal"]),
        DetectorKind(d["detector_kind"]),
        int(d["window_size"]),
        d.get("metadata", {}),
    )


def scan_to_dict(s: ProfileScan) -> dict:
    return {
        "cell_count": s.cell_count,
        "indices": s.indices.tolist(),
        "statistics": s.statistics.tolist(),
        "threshold": s.threshold,
        "detections": s.detections.tolist(),
        "metadata": _meta_json(s.metadata),
    }


def scan_from_dict(d: dict) -> ProfileScan:
    return ProfileScan(
        int(d["cell_count"]),
        np.asarray(d["indices"], dtype=np.int64),
        np.asarray(d["statistics"], dtype=float),
        float(d["threshold"]),
        np.asarray(d["detections"], dtype=bool),
        d.get("metadata", {}),
    )


def profile_to_dict(p: RangeProfile) -> dict:
    return {
        "intensity": p.intensity.tolist(),
        "is_target": p.is_target.tolist(),
        "metadata": _meta_json(p.metadata),
    }


def profile_from_dict(d: dict) -> RangeProfile:
    return RangeProfile(
        np.asarray(d["intensity"], dtype=float), np.asarray(d["is_target"], dtype=bool), d.get("metadata", {})
    )


# --- CSV writers ------------------------------------------------------------------


def roc_csv(theory: Optional[RocCurve], sim: Optional[RocCurve]) -> tuple[str, dict]:
    base = theory if theory is not None else sim
    if base is None:
        raise ValueError("need at least one ROC curve")
    if theory is not None and sim is not None and theory.pfa != sim.pfa:
        raise ValueError("theory and simulation curves must share the pfa grid")
    rows = []
    for i, pfa in enumerate(base.pfa):
        pt = theory.pd[i] if theory is not None else None
        if sim is not None:
            e = sim.estimates[i]
            rows.append([pfa, pt, e.probability, e.ci_low, e.ci_high, e.trials])
        else:
            rows.append([pfa, pt, None, None, None, None])
    meta = {
        "type": "roc",
        "detector_kind": base.detector_kind.value,
        "window_size": base.window_size,
        "alpha": base.alpha,
        "rho": base.rho,
        "h": base.h,
        "has_theory": theory is not None,
        "has_simulation": sim is not None,
        "theory_metadata": None if theory is None else _meta_json(theory.metadata),
        "simulation_metadata": None if sim is None else _meta_json(sim.metadata),
    }
    return _csv_text(ROC_HEADER, rows), meta


def sweep_csv(s: SweepResult) -> tuple[str, dict]:
    rows = [
        [s.value(i, "alpha"), s.value(i, "h"), s.nominal, e.probability, e.ci_low, e.ci_high, e.trials]
        for i, e in enumerate(s.estimates)
    ]
    meta = {
        "type": "sweep",
        "detector_kind": s.detector_kind.value,
        "window_size": s.window_size,
        "metadata": _meta_json(s.metadata),
    }
    return _csv_text(SWEEP_HEADER, rows), meta


def compare_csv(curves: list) -> tuple[str, dict]:
    bound, ca, cb = curves
    rows = [
        [p, bound.pd[i], ca.pd[i], cb.pd[i], bound.pd[i] - ca.pd[i], bound.pd[i] - cb.pd[i]]
        for i, p in enumerate(bound.pfa)
    ]
    meta = {
        "type": "compare",
        "window_size": ca.window_size,
        "alpha": bound.alpha,
        "rho": bound.rho,
        "h": bound.h,
        "sources": [c.source.value for c in curves],
        "clairvoyant_window_size": bound.window_size,
        "estimates": {
            c.detector_kind.value: [estimate_to_dict(e) for e in c.estimates]
            for c in (ca, cb)
            if c.estimates is not None
        },
        "curve_metadata": {
            c.detector_kind.value: _meta_json({k: v for k, v in c.metadata.items() if k != "gap_to_clairvoyant"})
            for c in (ca, cb)
        },
    }
    return _csv_text(COMPARE_HEADER, rows), meta


def scan_csv(s: ProfileScan) -> tuple[str, dict]:
    rows = [[int(i), st, s.threshold, bool(d)] for i, st, d in zip(s.indices, s.statistics, s.detections)]
    meta = {"type": "scan", "cell_count": s.cell_count, "metadata": _meta_json(s.metadata)}
    return _csv_text(SCAN_HEADER, rows), meta


def profile_csv(p: RangeProfile) -> tuple[str, dict]:
    rows = [[i, v, bool(t)] for i, (v, t) in enumerate(zip(p.intensity, p.is_target))]
    return _csv_text(PROFILE_HEADER, rows), {"type": "profile", "metadata": _meta_json(p.metadata)}


# --- CSV readers ------------------------------------------------------------------


def _read_rows(text: str, header: list) -> list:
    reader = csv.reader(io.StringIO(text))
    got = next(reader)
    if got != header:
        raise ValueError(f"unexpected CSV header {got}, expected {header}")
    return list(reader)


def roc_from_csv(text: str, meta: dict) -> dict:
    rows = _read_rows(text, ROC_HEADER)
    common = (
        DetectorKind(meta["detector_kind"]),
        int(meta["window_size"]),
        float(meta["alpha"]),
        float(meta["rho"]),
        float(meta["h"]),
    )
    theory = sim = None
    if meta["has_theory"]:
        pts = tuple((float(r[0]), float(r[1])) for r in rows)
        theory = RocCurve(pts, CurveSource.THEORY, *common, None, meta["theory_metadata"])
    if meta["has_simulation"]:
        ests = []
        for r in rows:
            trials = int(r[5])
            hits = int(round(float(r[2]) * trials))
            ests.append(TrialEstimate(hits, trials, float(r[3]), float(r[4])))
        pts = tuple((float(r[0]), e.probability) for r, e in zip(rows, ests))
        sim = RocCurve(pts, CurveSource.SIMULATION, *common, tuple(ests), meta["simulation_metadata"])
    return {"theory": theory, "simulation": sim}


def sweep_from_csv(text: str, meta: dict) -> SweepResult:
    rows = _read_rows(text, SWEEP_HEADER)
    axis, ests = [], []
    nominal = None
    for r in rows:
        axis.append((("alpha", float(r[0])), ("h", float(r[1]))))
        nominal = float(r[2])
        trials = int(r[6])
        ests.append(TrialEstimate(int(round(float(r[3]) * trials)), trials, float(r[4]), float(r[5])))
    return SweepResult(
        tuple(axis), tuple(ests), nominal, DetectorKind(meta["detector_kind"]), int(meta["window_size"]), meta["metadata"]
    )


def compare_from_csv(text: str, meta: dict) -> list:
    rows = _read_rows(text, COMPARE_HEADER)
    pfa = [float(r[0]) for r in rows]
    n = int(meta["window_size"])
    a, rho, h = float(meta["alpha"]), float(meta["rho"]), float(meta["h"])
    sources = [CurveSource(s) for s in meta["sources"]]
    bound = RocCurve(
        tuple(zip(pfa, (float(r[1]) for r in rows))),
        sources[0], DetectorKind.CLAIRVOYANT, int(meta["clairvoyant_window_size"]), a, rho, h,
    )
    curves = [bound]
    for col, gap_col, kind, src in ((2, 4, DetectorKind.CASE_A, sources[1]), (3, 5, DetectorKind.CASE_B, sources[2])):
        pd = [float(r[col]) for r in rows]
        raw = meta["estimates"].get(kind.value)
        ests = None if raw is None else tuple(estimate_from_dict(e) for e in raw)
        gaps = [float(r[gap_col]) for r in rows]
        extra = meta.get("curve_metadata", {}).get(kind.value, {})
        curves.append(
            RocCurve(tuple(zip(pfa, pd)), src, kind, n, a, rho, h, ests, {**extra, "gap_to_clairvoyant": gaps})
        )
    return curves


def scan_from_csv(text: str, meta: dict) -> ProfileScan:
    rows = _read_rows(text, SCAN_HEADER)
    threshold = float(rows[0][2]) if rows else math.nan
    return ProfileScan(
        int(meta["cell_count"]),
        np.array([int(r[0]) for r in rows], dtype=np.int64),
        np.array([float(r[1]) for r in rows], dtype=float),
        threshold,
        np.array([r[3] == "1" for r in rows], dtype=bool),
        meta["metadata"],
    )


def profile_from_csv(text: str, meta: dict) -> RangeProfile:
    rows = _read_rows(text, PROFILE_HEADER)
    return RangeProfile(
        np.array([float(r[1]) for r in rows], dtype=float),
        np.array([r[2] == "1" for r in rows], dtype=bool),
        meta["metadata"],
    )


# --- files ------------------------------------------------------------------------

_CSV_WRITERS = {
    "roc": lambda r: roc_csv(r.get("theory"), r.get("simulation")),
    "sweep": sweep_csv,
    "compare": compare_csv,
    "scan": scan_csv,
    "profile": profile_csv,
}
_CSV_READERS = {
    "roc": roc_from_csv,
    "sweep": sweep_from_csv,
    "compare": compare_from_csv,
    "scan": scan_from_csv,
    "profile": profile_from_csv,
}


def result_to_json(kind: str, result) -> dict:
    if kind == "roc":
        body = {k: None if v is None else roc_to_dict(v) for k, v in result.items()}
    elif kind == "sweep":
        body = sweep_to_dict(result)
    elif kind == "compare":
        body = {"curves": [roc_to_dict(c) for c in result]}
    elif kind == "scan":
        body = scan_to_dict(result)
    elif kind == "profile":
        body = profile_to_dict(result)
    else:
        raise ValueError(f"unknown result type {kind!r}")
    return {"type": kind, **body}


def result_from_json(d: dict):
    kind = d["type"]
    if kind == "roc":
        return {k: None if d.get(k) is None else roc_from_dict(d[k]) for k in ("theory", "simulation")}
    if kind == "sweep":
        return sweep_from_dict(d)
    if kind == "compare":
        return [roc_from_dict(c) for c in d["curves"]]
    if kind == "scan":
        return scan_from_dict(d)
    if kind == "profile":
        return profile_from_dict(d)
    raise ValueError(f"unknown result type {kind!r}")


def render(kind: str, result, fmt_name: str = "csv") -> tuple[str, Optional[str]]:
    """Serialise `result` to ``(body, sidecar)`` text; sidecar is None for JSON."""
    if fmt_name == "json":
        return _dump_json(result_to_json(kind, result)), None
    text, meta = _CSV_WRITERS[kind](result)
    return text, _dump_json(meta)


def write_result(kind: str, result, path: PathLike, fmt_name: str = "csv") -> None:
    body, sidecar = render(kind, result, fmt_name)
    path = Path(path)
    path.write_text(body)
    if sidecar is not None:
        sidecar_path(path).write_text(sidecar)


def read_result(path: PathLike):
    """Reload a file written by :func:`write_result`; returns ``(kind, result)``."""
    path = Path(path)
    text = path.read_text()
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        return meta["type"], _CSV_READERS[meta["type"]](text, meta)
    d = json.loads(text)
    return d["type"], result_from_json(d)
