"""Command-line front end.

Subcommands: ``threshold``, ``detect``, ``roc``, ``cfar-sweep``, ``compare``,
``scan``, ``validate`` and ``reproduce`` (runs every entry of a manifest).

Any option can also come from ``--config FILE`` (JSON object or ``key =
value`` lines, keys spelled like the long option without dashes); options
given on the command line win.  ``PARETOCFAR_SEED`` sets the default seed.

Exit status: 0 success, 1 invalid input, 2 an in-run check failed, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import serialization
from .detectors import DetectionInput, DetectorKind, DetectorSpec, detect
from .montecarlo import (
    DEFAULT_TRIALS,
    CurveSource,
    TrialEstimate,
    cfar_sweep,
    compare_to_clairvoyant,
    roc_agreement,
    roc_allowed_exceedances,
    roc_curve,
)
from .pareto_model import ParetoParams
from .rangeprofile import DEFAULT_GUARD, ProfileConfig, generate_profile, scan_profile
from .validation import run_identity_suite

EXIT_OK, EXIT_INVALID, EXIT_ASSERT, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "PARETOCFAR_SEED"
DEFAULT_WINDOW = 8


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- argument types ------------------------------------------------------------


def parse_count(text) -> int:
    value = float(text)
    if not value.is_integer() or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def parse_grid(text) -> list:
    """``a,b,c`` list, ``start:stop:step`` (endpoints inclusive within half a step) or one value."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 0.5)) + 1
        if count < 1:
            raise argparse.ArgumentTypeError(f"empty grid {text!r}")
        return [float(f"{start + k * step:.12g}") for k in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_target(text) -> tuple:
    try:
        idx, rho = str(text).split(":")
        return int(idx), float(rho)
    except ValueError:
        raise argparse.ArgumentTypeError(f"target must be index:rho, got {text!r}") from None


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# --- parser ---------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, seed: bool = True, output: bool = True) -> None:
    p.add_argument("--config", help="JSON or key=value file supplying option defaults")
    if seed:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
    if output:
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")


def _detector_args(p: argparse.ArgumentParser, pfa: bool = True) -> None:
    p.add_argument("--kind", choices=[k.value for k in DetectorKind])
    p.add_argument("--n", type=int, default=DEFAULT_WINDOW, help="reference window size")
    if pfa:
        p.add_argument("--pfa", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paretocfar", description="GLRT CFAR detection of Pareto targets in Pareto clutter.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("threshold", help="detector threshold for a design pfa")
    _detector_args(p)
    p.add_argument("--alpha", type=float, help="clutter shape (clairvoyant)")
    p.add_argument("--h", type=float, help="clutter scale (clairvoyant)")
    _common(p, seed=False, output=False)

    p = sub.add_parser("detect", help="decide on one CUT and window")
    _detector_args(p)
    p.add_argument("--cut", type=float)
    p.add_argument("--window", type=parse_grid)
    p.add_argument("--alpha", type=float)
    p.add_argument("--h", type=float)
    _common(p, seed=False, output=False)

    p = sub.add_parser("roc", help="ROC points, theory and/or simulation")
    _detector_args(p, pfa=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--pfa-grid", type=parse_grid)
    p.add_argument("--mode", choices=["theory", "simulation", "both"], default="both")
    p.add_argument("--trials", type=parse_count, default=DEFAULT_TRIALS)
    p.add_argument("--full-scale", action="store_true", help="allow more than 1e7 trials per point")
    _common(p)

    p = sub.add_parser("cfar-sweep", help="empirical pfa over a clutter-parameter grid")
    _detector_args(p)
    p.add_argument("--alpha", type=parse_grid)
    p.add_argument("--h", type=parse_grid, default=[1.0])
    p.add_argument("--trials", type=parse_count, default=DEFAULT_TRIALS)
    p.add_argument("--full-scale", action="store_true")
    _common(p)

    p = sub.add_parser("compare", help="clairvoyant bound versus both GLRT detectors")
    p.add_argument("--n", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--pfa-grid", type=parse_grid)
    p.add_argument("--trials", type=parse_count, default=None, help="simulate the GLRT curves with this many trials")
    _common(p)

    p = sub.add_parser("scan", help="sliding-window detection along a synthetic range profile")
    _detector_args(p)
    p.add_argument("--cells", type=parse_count, default=100_000)
    p.add_argument("--alpha", type=float)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--guard", type=int, default=DEFAULT_GUARD)
    p.add_argument("--target", type=parse_target, action="append", default=[])
    p.add_argument("--profile-in", help="read the profile from this CSV instead of generating one")
    p.add_argument("--profile-out", help="also write the profile CSV here")
    _common(p)

    p = sub.add_parser("validate", help="run the distributional identity checks")
    p.add_argument("--samples", type=parse_count, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--force-mismatch", action="store_true", help="add a deliberately failing negative control")
    p.add_argument("--out", help="report file (default: standard output)")
    p.add_argument("--config")

    p = sub.add_parser("reproduce", help="run every experiment listed in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output-dir", help="override the manifest's output directory")
    p.add_argument("--config")
    return parser


def load_config(path: str) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line is not key = value: {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
    out = {}
    for key, value in raw.items():
        dest = key.lstrip("-").replace("-", "_")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            value = repr(value)
        out[dest] = value
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required")
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        unknown = sorted(set(cfg) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for dest, value in cfg.items():
            action = known[dest]
            if isinstance(value, str) and action.type is not None:
                try:
                    value = action.type(value)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config key {dest}: {exc}") from None
            elif isinstance(value, str) and action.nargs == 0:
                value = value.lower() in ("1", "true", "yes")
            cfg[dest] = value
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = default_seed()
    return args


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


# --- output helpers ----------------------------------------------------------------


def _emit(kind: str, result, args) -> None:
    body, sidecar = serialization.render(kind, result, args.format)
    if args.out:
        path = Path(args.out)
        path.write_text(body)
        if sidecar is not None:
            serialization.sidecar_path(path).write_text(sidecar)
    else:
        sys.stdout.write(body)


def _summary(args, line: str) -> None:
    print(line, file=sys.stdout if args.out else sys.stderr)


def _spec(args, pfa: float) -> DetectorSpec:
    kind = DetectorKind(args.kind)
    if kind is DetectorKind.CLAIRVOYANT:
        _require(args, "alpha", "h")
        return DetectorSpec(kind, pfa, args.n, args.alpha, args.h)
    if kind is DetectorKind.CASE_A:
        _require(args, "h")
        return DetectorSpec(kind, pfa, args.n, known_scale=args.h)
    return DetectorSpec(kind, pfa, args.n)


# --- commands ---------------------------------------------------------------------


def cmd_threshold(args) -> int:
    _require(args, "kind", "pfa")
    if args.kind == DetectorKind.CASE_A.value and args.h is None:
        args.h = 1.0  # the case-A threshold does not involve the scale
    spec = _spec(args, args.pfa)
    record = {"kind": spec.kind.value, "pfa": spec.design_pfa, "n": spec.window_size, **spec.regime()}
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_detect(args) -> int:
    _require(args, "kind", "pfa", "cut", "window")
    args.n = len(args.window)
    spec = _spec(args, args.pfa)
    scale = args.h if spec.kind is not DetectorKind.CASE_B else None
    decision = detect(spec, DetectionInput(args.cut, tuple(args.window), scale))
    print(json.dumps(
        {"target_present": decision.target_present, "statistic": decision.statistic, "threshold": decision.threshold},
        sort_keys=True,
    ))
    return EXIT_OK


def cmd_roc(args) -> int:
    _require(args, "kind", "alpha", "rho", "pfa_grid")
    clutter, target = ParetoParams(args.alpha, args.h), ParetoParams(args.rho, args.h)
    spec = _spec(args, args.pfa_grid[0])
    theory = sim = None
    if args.mode in ("theory", "both"):
        theory = roc_curve(spec, clutter, target, args.pfa_grid, CurveSource.THEORY)
    if args.mode in ("simulation", "both"):
        sim = roc_curve(
            spec, clutter, target, args.pfa_grid, CurveSource.SIMULATION,
            args.trials, args.seed, args.workers, args.full_scale,
        )
    _emit("roc", {"theory": theory, "simulation": sim}, args)
    ok = True
    if theory is not None and sim is not None:
        z = roc_agreement(theory, sim)
        bad = sum(v > 3.0 for v in z)
        allowed = roc_allowed_exceedances(len(z))
        ok = bad <= allowed
        _summary(args, f"roc: points={len(z)} max_dev_sigma={max(z):.3f} violations={bad} allowed={allowed}")
    else:
        _summary(args, f"roc: points={len(args.pfa_grid)} mode={args.mode}")
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_cfar_sweep(args) -> int:
    _require(args, "kind", "pfa", "alpha")
    spec = _spec(args, args.pfa) if args.kind != "case-a" else DetectorSpec("case-a", args.pfa, args.n, known_scale=args.h[0])
    if spec.kind is DetectorKind.CLAIRVOYANT:
        spec = DetectorSpec(spec.kind, args.pfa, args.n, args.alpha[0], args.h[0])
    sweep = cfar_sweep(spec, args.alpha, args.h, args.trials, args.seed, args.workers, args.full_scale)
    _emit("sweep", sweep, args)
    bad = sweep.ci_violations()
    flat = sweep.is_flat()
    allowed = sweep.allowed_ci_violations()
    _summary(
        args,
        f"cfar-sweep: points={len(sweep.estimates)} max_rel_dev={sweep.max_relative_deviation():.4f} "
        f"ci_violations={bad} allowed={allowed} flatness_p={sweep.flatness_pvalue():.4g} flat={flat}",
    )
    return EXIT_OK if bad <= allowed and flat else EXIT_ASSERT


def cmd_compare(args) -> int:
    _require(args, "alpha", "rho", "pfa_grid")
    clutter, target = ParetoParams(args.alpha, args.h), ParetoParams(args.rho, args.h)
    curves = compare_to_clairvoyant(args.n, clutter, target, args.pfa_grid, args.trials, args.seed, args.workers)
    _emit("compare", curves, args)
    gaps_a = curves[1].metadata["gap_to_clairvoyant"]
    gaps_b = curves[2].metadata["gap_to_clairvoyant"]
    ok = True
    if args.trials is None:
        ok = min(gaps_a) >= -1e-12 and min(gaps_b) >= -1e-12
    _summary(args, f"compare: points={len(gaps_a)} max_gap_a={max(gaps_a):.6g} max_gap_b={max(gaps_b):.6g} bound_ok={ok}")
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_scan(args) -> int:
    _require(args, "kind", "pfa")
    if args.profile_in:
        kind, profile = serialization.read_result(args.profile_in)
        if kind != "profile":
            raise UsageError(f"{args.profile_in} is not a profile file")
    else:
        _require(args, "alpha")
        if args.n % 2:
            raise UsageError("--n must be even for a symmetric window")
        config = ProfileConfig(
            args.cells, ParetoParams(args.alpha, args.h), tuple(args.target), args.n // 2, args.guard, args.seed
        )
        profile = generate_profile(config)
    if args.profile_out:
        serialization.write_result("profile", profile, args.profile_out, "csv")
    spec = _spec(args, args.pfa)
    scan = scan_profile(profile, spec, args.guard)
    _emit("scan", scan, args)
    hits = int(scan.detections.sum())
    line = f"scan: eligible={len(scan.indices)} detections={hits}"
    ok = True
    if not args.profile_in and not args.target:
        est = TrialEstimate.from_counts(hits, len(scan.indices))
        ok = est.contains(spec.design_pfa)
        line += f" pfa_emp={est.probability:.6g} ci=[{est.ci_low:.6g},{est.ci_high:.6g}] within_ci={ok}"
    _summary(args, line)
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_validate(args) -> int:
    report = run_identity_suite(seed=args.seed, size=args.samples, force_mismatch=args.force_mismatch)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    print(f"validate: checks={len(report['checks'])} failed={len(failed)} {' '.join(failed)}".rstrip(),
          file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_ASSERT


def cmd_reproduce(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = json.loads(manifest_path.read_text())
    out_dir = Path(args.output_dir or manifest.get("output_dir", "results"))
    if not out_dir.is_absolute() and args.output_dir is None:
        out_dir = manifest_path.parent / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    for run in manifest["runs"]:
        argv = list(run["argv"]) + ["--out", str(out_dir / run["output"])]
        print(f"reproduce: {run['name']}", flush=True)
        worst = max(worst, main(argv))
    return worst


COMMANDS = {
    "threshold": cmd_threshold,
    "detect": cmd_detect,
    "roc": cmd_roc,
    "cfar-sweep": cmd_cfar_sweep,
    "compare": cmd_compare,
    "scan": cmd_scan,
    "validate": cmd_validate,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
