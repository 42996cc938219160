"""Self-checks of the distributional facts the detector thresholds rely on.

Each check draws from the Pareto sampler, applies a transformation and tests
the result against the law it should follow (one-sample KS at the 1% level,
a correlation spot-check, a binned density comparison or a quadrature).
The report is plain data so the CLI can dump it as JSON; with a fixed seed
it is byte-for-byte reproducible.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, stats

from .pareto_model import (
    GammaLaw,
    ParetoParams,
    g_density,
    log_cut_law,
    pareto_cdf,
    pareto_pdf,
    sample_pareto,
    spread_about_min_law,
    window_mean_log_law,
    window_min_law,
)

KS_LEVEL = 0.01
CORRELATION_LIMIT = 0.01
HIST_BINS = 50
BAND_SIGMAS = 3.0
DEFAULT_SEED = 0


@dataclass
class CheckResult:
    name: str
    passed: bool
    statistic: float
    limit: float
    detail: str = ""


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def _ks(name: str, sample: np.ndarray, cdf) -> CheckResult:
    res = stats.kstest(sample, cdf)
    return CheckResult(name, bool(res.pvalue > KS_LEVEL), float(res.pvalue), KS_LEVEL, f"D={res.statistic:.6g}")


def check_sampler(clutter: ParetoParams, size: int, rng) -> CheckResult:
    y = sample_pareto(clutter, rng, size)
    return _ks("pareto_sampler_ks", y, lambda v: pareto_cdf(v, clutter))


def check_log_exponential(clutter: ParetoParams, size: int, rng) -> CheckResult:
    y = sample_pareto(clutter, rng, size)
    return _ks("log_cut_exponential_ks", np.log(y / clutter.scale), log_cut_law(clutter).cdf)


def check_window_mean_gamma(clutter: ParetoParams, n: int, size: int, rng) -> CheckResult:
    x = sample_pareto(clutter, rng, (size, n))
    c = np.log(x / clutter.scale).mean(axis=1)
    return _ks(f"window_mean_log_gamma_ks_n{n}", c, window_mean_log_law(clutter, n).cdf)


def check_window_min(clutter: ParetoParams, n: int, size: int, rng) -> CheckResult:
    x = sample_pareto(clutter, rng, (size, n))
    return _ks(f"window_min_pareto_ks_n{n}", x.min(axis=1), window_min_law(clutter, n).cdf)


def check_spread_about_min(clutter: ParetoParams, n: int, size: int, rng) -> list:
    x = sample_pareto(clutter, rng, (size, n))
    xmin = x.min(axis=1)
    d = np.log(x / xmin[:, None]).sum(axis=1) / n
    ks = _ks(f"spread_about_min_gamma_ks_n{n}", d, spread_about_min_law(clutter, n).cdf)
    r = float(np.corrcoef(d, xmin)[0, 1])
    corr = CheckResult(
        f"spread_min_independence_n{n}", abs(r) < CORRELATION_LIMIT, abs(r), CORRELATION_LIMIT, f"r={r:.6g}"
    )
    return [ks, corr]


def check_g_histogram(clutter: ParetoParams, n: int, size: int, rng) -> list:
    """Binned counts of ``ln(Y/h) - ln(min X/h)`` against the asymmetric-Laplace density.

    Two verdicts on the same histogram: every bin inside its own 3-sigma band,
    and a chi-square test over the bins plus the two tails.  The per-bin band
    is a 50-way multiple comparison (about 13% of seeds fail it for a correct
    sampler), the chi-square test holds its nominal 1% level.
    """
    a = clutter.shape
    x = sample_pareto(clutter, rng, (size, n))
    y = sample_pareto(clutter, rng, size)
    g = np.log(y / clutter.scale) - np.log(x.min(axis=1) / clutter.scale)
    edges = np.linspace(-6.0 / (n * a), 6.0 / a, HIST_BINS + 1)
    counts, _ = np.histogram(g, bins=edges)
    probs = np.array(
        [
            integrate.quad(g_density, lo, hi, args=(n, a), points=[0.0] if lo < 0 < hi else None)[0]
            for lo, hi in zip(edges[:-1], edges[1:])
        ]
    )
    expected = size * probs
    sigma = np.sqrt(size * probs * (1.0 - probs))
    z = np.abs(counts - expected) / sigma
    worst = float(z.max())
    band = CheckResult(
        f"g_density_histogram_n{n}", worst <= BAND_SIGMAS, worst, BAND_SIGMAS, f"bins={HIST_BINS}"
    )
    tail_counts = [np.count_nonzero(g < edges[0]), np.count_nonzero(g >= edges[-1])]
    tail_probs = [
        integrate.quad(g_density, -np.inf, edges[0], args=(n, a))[0],
        integrate.quad(g_density, edges[-1], np.inf, args=(n, a))[0],
    ]
    obs = np.concatenate([counts, tail_counts])
    exp = size * np.concatenate([probs, tail_probs])
    exp *= obs.sum() / exp.sum()
    chi = stats.chisquare(obs, exp)
    omnibus = CheckResult(
        f"g_density_chisquare_n{n}", bool(chi.pvalue > KS_LEVEL), float(chi.pvalue), KS_LEVEL,
        f"chi2={chi.statistic:.6g} dof={len(obs) - 1}",
    )
    return [band, omnibus]


def check_g_normalised(clutter: ParetoParams, n: int) -> CheckResult:
    a = clutter.shape
    total = sum(
        integrate.quad(g_density, lo, hi, args=(n, a))[0]
        for lo, hi in ((-50.0 / a, 0.0), (0.0, 50.0 / a))
    )
    err = abs(total - 1.0)
    return CheckResult(f"g_density_integral_n{n}", err < 1e-6, err, 1e-6)


def check_pdf_is_cdf_derivative(clutter: ParetoParams) -> CheckResult:
    h = clutter.scale
    probes = h * np.array([1.001, 1.1, 1.5, 2.0, 5.0, 10.0])
    step = 1e-6 * probes
    deriv = (pareto_cdf(probes + step, clutter) - pareto_cdf(probes - step, clutter)) / (2 * step)
    rel = float(np.max(np.abs(deriv - pareto_pdf(probes, clutter)) / pareto_pdf(probes, clutter)))
    return CheckResult("pdf_matches_cdf_derivative", rel < 1e-6, rel, 1e-6)


def negative_control(size: int, rng) -> CheckResult:
    """Exponential data tested against Gamma(2, .); a working KS check must reject it."""
    e = rng.exponential(1.0, size)
    res = _ks("negative_control_exp_vs_gamma2", e, GammaLaw(2, 1.0).cdf)
    res.detail += " (deliberate mismatch)"
    return res


def run_identity_suite(
    seed: int = DEFAULT_SEED,
    size: int = 100_000,
    clutter: ParetoParams = ParetoParams(5.0, 0.7),
    windows: tuple = (4, 8),
    force_mismatch: bool = False,
) -> dict:
    """Run every check and return a JSON-ready report."""
    k = iter(range(1000))
    checks = [
        check_sampler(clutter, size, _rng(seed, next(k))),
        check_log_exponential(clutter, size, _rng(seed, next(k))),
        check_pdf_is_cdf_derivative(clutter),
    ]
    for n in windows:
        checks.append(check_window_mean_gamma(clutter, n, size, _rng(seed, next(k))))
        checks.append(check_window_min(clutter, n, size, _rng(seed, next(k))))
        checks.extend(check_spread_about_min(clutter, n, size, _rng(seed, next(k))))
        checks.extend(check_g_histogram(clutter, n, size, _rng(seed, next(k))))
        checks.append(check_g_normalised(clutter, n))
    if force_mismatch:
        checks.append(negative_control(size, _rng(seed, 999)))
    return {
        "seed": seed,
        "samples": size,
        "clutter": {"shape": clutter.shape, "scale": clutter.scale},
        "windows": list(windows),
        "checks": [asdict(c) for c in checks],
        "passed": all(c.passed for c in checks),
    }
