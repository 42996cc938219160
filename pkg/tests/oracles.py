"""Reference computations that share no code with the package.

Used to cross-check closed forms: a zooming grid search over the raw
log-likelihood, quadrature for detection probabilities and a plain-loop
reference for range-profile scans.
"""

import math

import numpy as np
from scipy import integrate, stats


def zoom_argmax(f, lo, hi, upper, points=33, iters=80):
    """Maximise ``f`` over a box by repeated grid search, halving the box around the best node."""
    lo, hi, upper = (np.asarray(v, dtype=float) for v in (lo, hi, upper))
    for _ in range(iters):
        axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
        values = f(*np.meshgrid(*axes, indexing="ij"))
        idx = np.unravel_index(np.nanargmax(values), values.shape)
        best = np.array([ax[i] for ax, i in zip(axes, idx)])
        half = (hi - lo) / 4.0
        lo, hi = best - half, np.minimum(best + half, upper)
    return best


def _sums(cut, window):
    return math.log(cut), math.fsum(math.log(v) for v in window)


def grid_mle_known_scale(cut, window, h):
    """Constrained (``rho <= alpha``) maximiser of the joint likelihood with known scale.

    Searched in ``(log alpha, log rho)`` where the likelihood separates.
    """
    n = len(window)
    ly, sx = _sums(cut, window)
    lh = math.log(h)

    def loglik(la, lr):
        a, r = np.exp(la), np.exp(lr)
        v = n * la + lr + (n * a + r) * lh - (r + 1) * ly - (a + 1) * sx
        return np.where(lr <= la, v, -np.inf)

    best = zoom_argmax(loglik, [-10, -10], [10, 10], [np.inf, np.inf])
    return math.exp(best[0]), math.exp(best[1])


def grid_mle_unknown_scale(cut, window):
    """Same search with the scale as a third coordinate ``log(h / min obs) <= 0``."""
    n = len(window)
    ly, sx = _sums(cut, window)
    lm = math.log(min(cut, min(window)))

    def loglik(la, lr, ls):
        a, r = np.exp(la), np.exp(lr)
        v = n * la + lr + (n * a + r) * (lm + ls) - (r + 1) * ly - (a + 1) * sx
        return np.where(lr <= la, v, -np.inf)

    best = zoom_argmax(loglik, [-10, -10, -5], [10, 10, 0], [np.inf, np.inf, 0.0], points=21)
    return math.exp(best[0]), math.exp(best[1]), math.exp(lm + best[2])


def pd_case_a_quad(threshold, n, alpha, rho):
    """``E[exp(-rho * threshold * S / n)]`` with ``S ~ Gamma(n, 1/alpha)`` the summed window logs."""
    law = stats.gamma(n, scale=1.0 / alpha)
    return integrate.quad(lambda s: math.exp(-rho * threshold * s / n) * law.pdf(s), 0, np.inf)[0]


def pd_case_b_quad(threshold, n, alpha, rho):
    """Average of ``P(G > threshold * d)`` over the spread ``D ~ Gamma(n - 1, 1/(n alpha))``."""
    law = stats.gamma(n - 1, scale=1.0 / (n * alpha))
    mass = n * alpha / (rho + n * alpha)
    return integrate.quad(lambda d: mass * math.exp(-rho * threshold * d) * law.pdf(d), 0, np.inf)[0]


def pfa_case_b_quad(threshold, n):
    """Size of the case-B test by quadrature at unit clutter shape (the size is shape-free)."""
    return pd_case_b_quad(threshold, n, 1.0, 1.0)


def loop_scan(values, half, guard, statistic):
    """Reference sliding window: returns ``{index: statistic(cut, window)}`` for every eligible cell."""
    out = {}
    for i in range(half + guard, len(values) - half - guard):
        lead = list(values[i - guard - half : i - guard])
        lag = list(values[i + guard + 1 : i + guard + 1 + half])
        out[i] = statistic(values[i], lead + lag)
    return out
