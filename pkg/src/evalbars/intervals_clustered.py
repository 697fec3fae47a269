"""Inference when questions come in clusters with shared difficulty.

Two approaches: the CLT interval with a post-hoc clustered standard error,
and a hierarchical Beta-Binomial model whose posterior is approximated by
importance sampling from the prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from evalbars.data import ClusteredEvalData
from evalbars.errors import DegeneratePosteriorError, DomainError, InsufficientDataError
from evalbars.interval import Interval, PosteriorSamples, effective_sample_size, importance_quantiles
from evalbars.intervals_single import _levels, normal_critical
from evalbars.statfn import as_generator

DEFAULT_IS_K = 10_000


def _clustered_variance(data: ClusteredEvalData) -> tuple[float, float]:
    """``(raw variance, plain CLT variance)``; the raw value may be negative."""
    n = data.N
    if n < 2:
        raise InsufficientDataError("clustered SE needs at least two observations")
    n_t, y_t, mult = data.grouped()
    n_t = n_t.astype(float)
    y_t = y_t.astype(float)
    ybar = data.S / n
    # Sum over i != j in a cluster of (y_i - ybar)(y_j - ybar), from (N_t, Y_t) alone.
    total = (y_t - n_t * ybar) ** 2
    diag = y_t * (1.0 - ybar) ** 2 + (n_t - y_t) * ybar**2
    cross = float(np.sum(mult * (total - diag)))
    plain = ybar * (1.0 - ybar) / n
    return plain + cross / (n * n), plain


def clustered_se(data: ClusteredEvalData) -> float:
    """Clustered standard error of the pooled mean; negative variances clamp to 0."""
    raw, _ = _clustered_variance(data)
    return float(np.sqrt(max(raw, 0.0)))


def clustered_clt_bounds(data: ClusteredEvalData, levels):
    raw, _ = _clustered_variance(data)
    se = np.sqrt(max(raw, 0.0))
    z = normal_critical(levels)
    ybar = data.S / data.N
    return ybar - z * se, ybar + z * se


def clustered_clt_interval(data: ClusteredEvalData, level: float = 0.95) -> Interval:
    raw, plain = _clustered_variance(data)
    lo, hi = clustered_clt_bounds(data, level)
    lo, hi = float(lo[0]), float(hi[0])
    diagnostics = {
        "zero_width": hi == lo,
        "out_of_range": lo < 0.0 or hi > 1.0,
        "variance_clamped": raw < 0.0,
        "se_plain": float(np.sqrt(plain)),
    }
    return Interval(lo, hi, level, "clustered-clt", diagnostics)


@dataclass(frozen=True, eq=False)
class ClusteredISResult:
    theta: np.ndarray
    d: np.ndarray
    weights: np.ndarray
    ess: float


def clustered_importance_sampler(data: ClusteredEvalData, K: int, rng) -> ClusteredISResult:
    """Prior-proposal sampler for ``theta ~ Beta(1, 1)``, ``d ~ Gamma(1, rate=1)``.

    Each cluster contributes ``BetaBin(Y_t; N_t, d*theta, d*(1-theta))`` to the
    log-weight. Clusters with equal ``(N_t, Y_t)`` are grouped so the sum is
    order-independent.
    """
    if K < 1000:
        raise DomainError("K must be at least 1000")
    gen = as_generator(rng)
    theta = gen.beta(1.0, 1.0, size=K)
    d = gen.gamma(1.0, 1.0, size=K)
    n_t, y_t, mult = data.grouped()
    a = (d * theta)[:, None]
    b = (d * (1.0 - theta))[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        per_group = betaln(y_t + a, n_t - y_t + b) - betaln(a, b)
        log_w = per_group @ mult.astype(float)
    # Binomial coefficients are constant in (theta, d) and cancel on normalization.
    log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    top = np.max(log_w)
    if not np.isfinite(top):
        raise DegeneratePosteriorError("all clustered log-weights are non-finite")
    w = np.exp(log_w - top)
    w /= w.sum()
    return ClusteredISResult(theta, d, w, effective_sample_size(w))


def bayes_clustered_bounds(data: ClusteredEvalData, levels, k: int, rng, resample: bool = True):
    alpha = 1.0 - _levels(levels)
    gen = as_generator(rng)
    res = clustered_importance_sampler(data, k, gen)
    probs = np.concatenate([alpha / 2.0, 1.0 - alpha / 2.0])
    q = importance_quantiles(res.theta, res.weights, probs, gen, resample)
    return q[: alpha.size], q[alpha.size :]


def bayes_clustered_interval(
    data: ClusteredEvalData, level: float = 0.95, K: int = DEFAULT_IS_K, rng=None, resample: bool = True
) -> tuple[Interval, PosteriorSamples]:
    """Credible interval on the global accuracy ``theta`` of the hierarchical model."""
    if rng is None:
        raise DomainError("an rng stream is required")
    gen = as_generator(rng)
    res = clustered_importance_sampler(data, K, gen)
    alpha = 1.0 - level
    lo, hi = importance_quantiles(res.theta, res.weights, [alpha / 2.0, 1.0 - alpha / 2.0], gen, resample)
    diagnostics = {"K": K, "ess": res.ess, "resampled": resample}
    return (
        Interval(lo, hi, level, "bayes-clustered", diagnostics),
        PosteriorSamples(res.theta, res.weights, res.ess),
    )
