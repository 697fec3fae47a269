"""Exact coverage of the closed-form single-proportion intervals by enumeration.

For a fixed ``theta`` the coverage is a finite sum over ``S = 0..N``. Averaged
over a ``Beta(a, b)`` prior on ``theta`` it is still closed form: each outcome
contributes its Beta-Binomial mass times the posterior probability that
``theta`` falls inside that outcome's interval.
"""

from __future__ import annotations

import numpy as np
from scipy import special, stats

from evalbars import intervals_single as isg
from evalbars.errors import DomainError

EXACT_METHODS = {
    "clt": isg.clt_bounds,
    "t": isg.t_bounds,
    "wilson": isg.wilson_bounds,
    "cp": isg.clopper_pearson_bounds,
    "bayes": isg.bayes_beta_bounds,
}


def _all_bounds(method: str, n: int, levels, clamp: bool) -> tuple[np.ndarray, np.ndarray]:
    if method not in EXACT_METHODS:
        raise DomainError(f"exact coverage is available for {sorted(EXACT_METHODS)}, not {method!r}")
    fn = EXACT_METHODS[method]
    pairs = [fn(s, n, levels) for s in range(n + 1)]
    lo = np.array([p[0] for p in pairs])
    hi = np.array([p[1] for p in pairs])
    if clamp:
        lo, hi = np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)
    return lo, hi


def exact_coverage(method: str, theta, n: int, levels, clamp: bool = False) -> np.ndarray:
    """``P(theta in CI)`` under ``S ~ Binomial(n, theta)`` for each level.

    ``theta`` may be an array; the result then has one row per value.
    """
    lo, hi = _all_bounds(method, n, levels, clamp)
    th = np.asarray(theta, dtype=float)
    flat = np.atleast_1d(th)
    pmf = stats.binom.pmf(np.arange(n + 1)[None, :], n, flat[:, None])
    t = flat[:, None, None]
    inside = (lo[None] <= t) & (t <= hi[None])
    out = np.einsum("ts,tsl->tl", pmf, inside)
    return out[0] if th.ndim == 0 else out


def prior_averaged_coverage(
    method: str, n: int, levels, prior: tuple[float, float] = (1.0, 1.0), clamp: bool = False
) -> np.ndarray:
    """Coverage averaged over ``theta ~ Beta(prior)``; what the iid harness estimates."""
    a, b = prior
    lo, hi = _all_bounds(method, n, levels, clamp)
    s = np.arange(n + 1)
    mass = stats.betabinom.pmf(s, n, a, b)[:, None]
    pa, pb = (s + a)[:, None], (n - s + b)[:, None]
    inside = special.betainc(pa, pb, np.clip(hi, 0.0, 1.0)) - special.betainc(pa, pb, np.clip(lo, 0.0, 1.0))
    return np.sum(mass * inside, axis=0)
