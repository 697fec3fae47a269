"""Comparing two models: independent samples and paired samples.

Targets are the accuracy difference ``theta_A - theta_B`` and the odds ratio
``[theta_A / (1 - theta_A)] / [theta_B / (1 - theta_B)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri

from evalbars.data import BinaryEvalVector, PairedEvalData
from evalbars.errors import DegeneratePosteriorError, DomainError, EmptyDataError, InsufficientDataError
from evalbars.interval import (
    Interval,
    PosteriorSamples,
    effective_sample_size,
    empirical_quantiles,
    importance_quantiles,
)
from evalbars.intervals_single import _levels, normal_critical
from evalbars.statfn import as_generator, bivariate_normal_cdf

DEFAULT_POSTERIOR_K = 2_000
DEFAULT_IS_K = 10_000
METRICS = ("difference", "odds_ratio")


# --- CLT ------------------------------------------------------------------


def clt_diff_bounds(sa: int, na: int, sb: int, nb: int, levels):
    if na < 1 or nb < 1:
        raise EmptyDataError("both samples need at least one observation")
    z = normal_critical(levels)
    pa, pb = sa / na, sb / nb
    se = np.sqrt(pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb)
    diff = pa - pb
    return diff - z * se, diff + z * se


def paired_clt_bounds(counts: tuple[int, int, int, int], levels):
    s, t, u, v = counts
    n = s + t + u + v
    if n < 2:
        raise InsufficientDataError("paired CLT interval needs at least two pairs")
    z = normal_critical(levels)
    mean = (t - u) / n
    # D_i is +1 (T times), -1 (U times) or 0, so sum(D^2) = T + U.
    var = max((t + u - n * mean * mean) / (n - 1), 0.0)
    half = z * np.sqrt(var / n)
    return mean - half, mean + half


def clt_diff_interval(y_a: BinaryEvalVector, y_b: BinaryEvalVector, level: float = 0.95) -> Interval:
    """Unpaired difference of proportions with Bernoulli plug-in variances."""
    lo, hi = clt_diff_bounds(y_a.S, y_a.N, y_b.S, y_b.N, level)
    lo, hi = float(lo[0]), float(hi[0])
    return Interval(lo, hi, level, "clt-diff", {"zero_width": hi == lo, "out_of_range": lo < -1 or hi > 1})


def paired_clt_interval(data: PairedEvalData, level: float = 0.95) -> Interval:
    lo, hi = paired_clt_bounds(data.counts, level)
    lo, hi = float(lo[0]), float(hi[0])
    return Interval(lo, hi, level, "paired-clt", {"zero_width": hi == lo, "out_of_range": lo < -1 or hi > 1})


# --- conjugate Bayes for independent samples --------------------------------


def _transform(theta_a: np.ndarray, theta_b: np.ndarray, metric: str) -> np.ndarray:
    if metric == "difference":
        return theta_a - theta_b
    if metric == "odds_ratio":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (theta_a / (1.0 - theta_a)) / (theta_b / (1.0 - theta_b))
        return out
    raise DomainError(f"unknown metric {metric!r}; expected one of {METRICS}")


def independent_posterior_draws(sa: int, na: int, sb: int, nb: int, k: int, rng):
    """``k`` draws each from ``Beta(1 + S_A, 1 + N_A - S_A)`` and the B analogue."""
    gen = as_generator(rng)
    theta_a = gen.beta(1 + sa, 1 + na - sa, size=k)
    theta_b = gen.beta(1 + sb, 1 + nb - sb, size=k)
    return theta_a, theta_b


def bayes_independent_bounds(sa, na, sb, nb, levels, metric: str, k: int, rng):
    alpha = 1.0 - _levels(levels)
    theta_a, theta_b = independent_posterior_draws(sa, na, sb, nb, k, rng)
    values = _transform(theta_a, theta_b, metric)
    values = np.sort(values[~np.isnan(values)])
    return (
        empirical_quantiles(values, alpha / 2.0, presorted=True),
        empirical_quantiles(values, 1.0 - alpha / 2.0, presorted=True),
    )


def bayes_independent_comparison(
    y_a: BinaryEvalVector,
    y_b: BinaryEvalVector,
    level: float = 0.95,
    metric: str = "difference",
    K: int = DEFAULT_POSTERIOR_K,
    rng=None,
) -> tuple[Interval, PosteriorSamples]:
    """Quantile credible interval for the difference or odds ratio under uniform priors.

    Odds-ratio draws can be infinite when a posterior draw rounds to 0 or 1;
    they enter the quantiles as-is and the result is flagged.
    """
    if K < 1000:
        raise DomainError("K must be at least 1000")
    if rng is None:
        raise DomainError("an rng stream is required")
    theta_a, theta_b = independent_posterior_draws(y_a.S, y_a.N, y_b.S, y_b.N, K, rng)
    values = _transform(theta_a, theta_b, metric)
    finite = values[~np.isnan(values)]
    alpha = 1.0 - level
    lo, hi = empirical_quantiles(finite, [alpha / 2.0, 1.0 - alpha / 2.0])
    diagnostics = {"K": K, "metric": metric, "upper_infinite": bool(np.isinf(hi))}
    if finite.size != values.size:
        diagnostics["indeterminate_draws"] = int(values.size - finite.size)
    name = "bayes-diff" if metric == "difference" else "bayes-or"
    return Interval(lo, hi, level, name, diagnostics), PosteriorSamples(values)


def prob_A_beats_B(y_a: BinaryEvalVector, y_b: BinaryEvalVector, K: int = DEFAULT_POSTERIOR_K, rng=None) -> float:
    """Monte Carlo estimate of ``P(theta_A > theta_B | data)`` under uniform priors."""
    if K < 1000:
        raise DomainError("K must be at least 1000")
    if rng is None:
        raise DomainError("an rng stream is required")
    theta_a, theta_b = independent_posterior_draws(y_a.S, y_a.N, y_b.S, y_b.N, K, rng)
    return float(np.mean(theta_a > theta_b))


# --- Fisher exact test inversion ------------------------------------------


def _log_choose(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


class _FisherTable:
    """Conditional distribution of ``S_A`` given both margins, noncentrality ``psi``."""

    def __init__(self, sa: int, na: int, sb: int, nb: int):
        self.x = sa
        m1 = sa + sb
        self.lo = max(0, m1 - nb)
        self.hi = min(na, m1)
        self.support = np.arange(self.lo, self.hi + 1, dtype=float)
        self.log_base = _log_choose(na, self.support) + _log_choose(nb, m1 - self.support)

    def log_tail(self, log_psi: np.ndarray, upper: bool) -> tuple[np.ndarray, np.ndarray]:
        """``log P(X >= x)`` (``upper``) or ``log P(X <= x)``, and its derivative in ``log psi``.

        The derivative is ``E[X | tail] - E[X]``.
        """
        lw = self.log_base[None, :] + log_psi[:, None] * self.support[None, :]
        lw -= lw.max(axis=1, keepdims=True)
        w = np.exp(lw)
        mask = self.support >= self.x if upper else self.support <= self.x
        total = w.sum(axis=1)
        tail_w = w[:, mask]
        tail = tail_w.sum(axis=1)
        mean_all = (w @ self.support) / total
        with np.errstate(divide="ignore", invalid="ignore"):
            mean_tail = (tail_w @ self.support[mask]) / tail
            return np.log(tail) - np.log(total), mean_tail - mean_all


def _solve_log_psi(table: _FisherTable, log_target: np.ndarray, upper: bool, tol: float = 1e-12) -> np.ndarray:
    """Root of ``log_tail(log psi) = log_target``, vectorised over targets.

    Bracketing first, then Newton steps that fall back to bisection whenever
    they leave the bracket. The upper tail increases in ``psi``; the lower
    tail decreases.
    """
    sign = 1.0 if upper else -1.0

    def f(lp):
        val, deriv = table.log_tail(lp, upper)
        return sign * (val - log_target), sign * deriv

    lo = np.full(log_target.shape, -1.0)
    hi = np.full(log_target.shape, 1.0)
    for _ in range(64):
        f_lo, _ = f(lo)
        f_hi, _ = f(hi)
        need_lo = f_lo > 0
        need_hi = f_hi < 0
        if not (need_lo.any() or need_hi.any()):
            break
        lo = np.where(need_lo, 2.0 * lo, lo)
        hi = np.where(need_hi, 2.0 * hi, hi)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx, dfx = f(x)
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx < 0, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / dfx
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        x_new = np.where(ok, newton, 0.5 * (lo + hi))
        done = np.abs(x_new - x) <= tol * np.maximum(1.0, np.abs(x))
        x = x_new
        if np.all(done | (hi - lo <= tol * np.maximum(1.0, np.abs(x)))):
            break
    return x


def fisher_or_bounds(sa: int, na: int, sb: int, nb: int, levels):
    """Odds-ratio interval from inverting the conditional exact test.

    The two-sided p-value doubles the smaller tail, so ``psi`` is retained when
    both tails exceed ``alpha/2``. Bounds at the edge of the support are
    ``0`` and ``+inf``.
    """
    if na < 1 or nb < 1:
        raise EmptyDataError("both samples need at least one observation")
    alpha = 1.0 - _levels(levels)
    table = _FisherTable(sa, na, sb, nb)
    half = alpha / 2.0
    if table.x == table.lo:
        lower = np.zeros_like(half)
    else:
        lower = np.exp(_solve_log_psi(table, np.log(half), upper=True))
    if table.x == table.hi:
        upper = np.full_like(half, np.inf)
    else:
        upper = np.exp(_solve_log_psi(table, np.log(half), upper=False))
    return lower, upper


def fisher_exact_or_interval(y_a: BinaryEvalVector, y_b: BinaryEvalVector, level: float = 0.95) -> Interval:
    lo, hi = fisher_or_bounds(y_a.S, y_a.N, y_b.S, y_b.N, level)
    lo, hi = float(lo[0]), float(hi[0])
    return Interval(lo, hi, level, "fisher", {"lower_zero": lo == 0.0, "upper_infinite": bool(np.isinf(hi))})


# --- paired Bayes via importance sampling ---------------------------------


def paired_cell_probs(theta_a, theta_b, rho):
    """Cell probabilities ``(both, A only, B only, neither)`` of the thresholded Gaussian.

    ``neither`` is the bivariate normal CDF at the origin; the other three
    follow from the two marginals.
    """
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    mu_a = ndtri(theta_a)
    mu_b = ndtri(theta_b)
    p_v = bivariate_normal_cdf(0.0, 0.0, mu_a, mu_b, rho)
    p_s = theta_a + theta_b + p_v - 1.0
    p_t = 1.0 - theta_b - p_v
    p_u = 1.0 - theta_a - p_v
    return p_s, p_t, p_u, p_v


@dataclass(frozen=True, eq=False)
class PairedISResult:
    theta_a: np.ndarray
    theta_b: np.ndarray
    rho: np.ndarray
    weights: np.ndarray
    ess: float
    n_valid: int


def paired_importance_sampler(counts: tuple[int, int, int, int], K: int, rng) -> PairedISResult:
    """Prior-proposal importance sampler for the bivariate-probit paired model.

    Proposal: ``theta_A, theta_B ~ Beta(1, 1)``, ``rho = 2 * Beta(4, 2) - 1``.
    Draws whose cell probabilities are not all positive get zero weight.
    """
    if K < 1000:
        raise DomainError("K must be at least 1000")
    s, t, u, v = counts
    gen = as_generator(rng)
    theta_a = gen.beta(1.0, 1.0, size=K)
    theta_b = gen.beta(1.0, 1.0, size=K)
    rho = 2.0 * gen.beta(4.0, 2.0, size=K) - 1.0
    p_s, p_t, p_u, p_v = paired_cell_probs(theta_a, theta_b, rho)
    valid = (p_s > 0) & (p_t > 0) & (p_u > 0) & (p_v > 0)
    if not np.any(valid):
        raise DegeneratePosteriorError("no prior draw gives positive probability to all four cells")
    log_w = np.full(K, -np.inf)
    with np.errstate(over="ignore", invalid="ignore"):
        log_w[valid] = (
            s * np.log(p_s[valid]) + t * np.log(p_t[valid]) + u * np.log(p_u[valid]) + v * np.log(p_v[valid])
        )
    log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    top = np.max(log_w)
    if not np.isfinite(top):
        raise DegeneratePosteriorError("all paired log-weights are non-finite")
    w = np.exp(log_w - top)
    w /= w.sum()
    return PairedISResult(theta_a, theta_b, rho, w, effective_sample_size(w), int(valid.sum()))


def bayes_paired_bounds(counts, levels, k: int, rng, resample: bool = True):
    alpha = 1.0 - _levels(levels)
    gen = as_generator(rng)
    res = paired_importance_sampler(counts, k, gen)
    probs = np.concatenate([alpha / 2.0, 1.0 - alpha / 2.0])
    q = importance_quantiles(res.theta_a - res.theta_b, res.weights, probs, gen, resample)
    return q[: alpha.size], q[alpha.size :]


def bayes_paired_diff(
    data: PairedEvalData, level: float = 0.95, K: int = DEFAULT_IS_K, rng=None, resample: bool = True
) -> tuple[Interval, PosteriorSamples]:
    """Credible interval on ``theta_A - theta_B`` for paired outcomes.

    With ``resample=True`` (default) posterior draws come from weighted
    resampling with replacement; otherwise weighted quantiles are used
    directly. The returned samples carry the importance weights and ESS.
    """
    if rng is None:
        raise DomainError("an rng stream is required")
    gen = as_generator(rng)
    res = paired_importance_sampler(data.counts, K, gen)
    diff = res.theta_a - res.theta_b
    alpha = 1.0 - level
    lo, hi = importance_quantiles(diff, res.weights, [alpha / 2.0, 1.0 - alpha / 2.0], gen, resample)
    diagnostics = {"K": K, "ess": res.ess, "valid_draws": res.n_valid, "resampled": resample}
    return Interval(lo, hi, level, "bayes-paired", diagnostics), PosteriorSamples(diff, res.weights, res.ess)


def paired_prob_A_beats_B(data: PairedEvalData, K: int = DEFAULT_IS_K, rng=None) -> float:
    """Importance-weighted estimate of ``P(theta_A > theta_B | paired data)``."""
    if rng is None:
        raise DomainError("an rng stream is required")
    res = paired_importance_sampler(data.counts, K, rng)
    return float(np.sum(res.weights * (res.theta_a > res.theta_b)))
