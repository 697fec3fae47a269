"""F1 score of a binary classifier from its confusion matrix, with intervals.

Counts are ordered ``(TP, FP, FN, TN)`` throughout.
"""

from __future__ import annotations

import math

import numpy as np

from evalbars.data import ConfusionCounts
from evalbars.errors import DegeneratePosteriorError, DomainError, InsufficientDataError, UndefinedMetricError
from evalbars.interval import Interval, PosteriorSamples, empirical_quantiles
from evalbars.intervals_single import _levels, normal_critical
from evalbars.statfn import as_generator

DEFAULT_POSTERIOR_K = 2_000
DEFAULT_BOOTSTRAP_K = 10_000
KINDS = ("quantile", "hdi")


def _f1_denominator(c: ConfusionCounts) -> int:
    return 2 * c.n_tp + c.n_fp + c.n_fn


def f1_point(c: ConfusionCounts) -> float:
    denom = _f1_denominator(c)
    if denom == 0:
        raise UndefinedMetricError("F1 is undefined when TP, FP and FN are all zero")
    return 2.0 * c.n_tp / denom


def f1_of_probs(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """F1 for each row of a ``(K, 4)`` array; returns ``(values, defined_mask)``."""
    probs = np.asarray(probs, dtype=float)
    num = 2.0 * probs[:, 0]
    denom = num + probs[:, 1] + probs[:, 2]
    ok = denom > 0
    out = np.zeros(probs.shape[0])
    out[ok] = num[ok] / denom[ok]
    return out, ok


def f1_delta_se(c: ConfusionCounts) -> float:
    """First-order standard error ``sqrt(F(1-F)(2-F) / (2TP + FP + FN))``."""
    f = f1_point(c)
    return math.sqrt(f * (1.0 - f) * (2.0 - f) / _f1_denominator(c))


def f1_delta_bounds(c: ConfusionCounts, levels):
    f = f1_point(c)
    half = normal_critical(levels) * f1_delta_se(c)
    return f - half, f + half


def f1_delta_interval(c: ConfusionCounts, level: float = 0.95) -> Interval:
    """Delta-method interval; unclamped, with pathology flags. Independent of TN."""
    lo, hi = f1_delta_bounds(c, level)
    lo, hi = float(lo[0]), float(hi[0])
    diagnostics = {"zero_width": hi == lo, "out_of_range": lo < 0.0 or hi > 1.0, "point": f1_point(c)}
    return Interval(lo, hi, level, "delta", diagnostics)


def _window_size(prob: float, n: int) -> int:
    # Guard against prob * n landing a hair above an integer (0.95 * 2000).
    return max(1, min(n, math.ceil(prob * n - 1e-9)))


def _hdi_sorted(x: np.ndarray, prob: float) -> tuple[float, float]:
    m = _window_size(prob, x.size)
    widths = x[m - 1 :] - x[: x.size - m + 1]
    i = int(np.argmin(widths))  # first minimum, i.e. the smallest lower bound
    return float(x[i]), float(x[i + m - 1])


def hdi(samples: PosteriorSamples, prob: float) -> Interval:
    """Narrowest window of sorted draws holding ``ceil(prob * K)`` of them."""
    if not 0.0 < prob < 1.0:
        raise DomainError("prob must lie in (0, 1)")
    if samples.weights is not None:
        raise DomainError("hdi needs unweighted draws; resample weighted draws first")
    if len(samples) < 2:
        raise InsufficientDataError("hdi needs at least two draws")
    lo, hi = _hdi_sorted(np.sort(samples.draws), prob)
    return Interval(lo, hi, prob, "hdi", {"window": _window_size(prob, len(samples))})


def _interval_from_sorted(x: np.ndarray, levels: np.ndarray, kind: str):
    if kind == "quantile":
        alpha = 1.0 - levels
        return (
            empirical_quantiles(x, alpha / 2.0, presorted=True),
            empirical_quantiles(x, 1.0 - alpha / 2.0, presorted=True),
        )
    if kind == "hdi":
        pairs = np.array([_hdi_sorted(x, lv) for lv in levels])
        return pairs[:, 0], pairs[:, 1]
    raise DomainError(f"unknown interval kind {kind!r}; expected one of {KINDS}")


def posterior_f1_draws(c: ConfusionCounts, k: int, rng) -> tuple[np.ndarray, int]:
    """F1 of ``k`` draws from ``Dirichlet(1 + counts)``; returns (defined draws, excluded count)."""
    probs = as_generator(rng).dirichlet(c.as_array().astype(float) + 1.0, size=k)
    values, ok = f1_of_probs(probs)
    return values[ok], int(k - ok.sum())


def bayes_f1_bounds(c: ConfusionCounts, levels, k: int, rng, kind: str = "quantile"):
    values, _ = posterior_f1_draws(c, k, rng)
    if values.size == 0:
        raise DegeneratePosteriorError("every posterior draw has an undefined F1")
    return _interval_from_sorted(np.sort(values), _levels(levels), kind)


def bayes_f1_interval(
    c: ConfusionCounts, level: float = 0.95, K: int = DEFAULT_POSTERIOR_K, rng=None, kind: str = "quantile"
) -> tuple[Interval, PosteriorSamples]:
    """Credible interval for F1 under a uniform Dirichlet prior on the four cell rates.

    ``kind`` selects the equal-tailed interval (``"quantile"``) or the
    highest-density window over the draws (``"hdi"``).
    """
    if K < 1000:
        raise DomainError("K must be at least 1000")
    if rng is None:
        raise DomainError("an rng stream is required")
    if kind not in KINDS:
        raise DomainError(f"unknown interval kind {kind!r}; expected one of {KINDS}")
    values, excluded = posterior_f1_draws(c, K, rng)
    if values.size == 0:
        raise DegeneratePosteriorError("every posterior draw has an undefined F1")
    lo, hi = _interval_from_sorted(np.sort(values), np.array([level]), kind)
    diagnostics = {"K": K, "kind": kind, "excluded_draws": excluded}
    name = "bayes-qbi" if kind == "quantile" else "bayes-hdi"
    return Interval(float(lo[0]), float(hi[0]), level, name, diagnostics), PosteriorSamples(values)


def bootstrap_f1_values(c: ConfusionCounts, k: int, rng) -> tuple[np.ndarray, int]:
    """F1 of ``k`` multinomial resamples of the observed counts; drops undefined ones."""
    n = c.N
    if n < 1:
        raise InsufficientDataError("bootstrap needs at least one observation")
    if k < 100:
        raise DomainError("bootstrap needs K >= 100 resamples")
    draws = as_generator(rng).multinomial(n, c.as_array() / n, size=k)
    values, ok = f1_of_probs(draws)
    return values[ok], int(k - ok.sum())


def bootstrap_f1_bounds(c: ConfusionCounts, levels, k: int, rng):
    values, _ = bootstrap_f1_values(c, k, rng)
    if values.size == 0:
        raise DegeneratePosteriorError("every bootstrap resample has an undefined F1")
    return _interval_from_sorted(np.sort(values), _levels(levels), "quantile")


def bootstrap_f1_interval(
    c: ConfusionCounts, level: float = 0.95, K: int = DEFAULT_BOOTSTRAP_K, rng=None
) -> Interval:
    if rng is None:
        raise DomainError("an rng stream is required")
    values, dropped = bootstrap_f1_values(c, K, rng)
    if values.size == 0:
        raise DegeneratePosteriorError("every bootstrap resample has an undefined F1")
    lo, hi = _interval_from_sorted(np.sort(values), np.array([level]), "quantile")
    return Interval(float(lo[0]), float(hi[0]), level, "bootstrap", {"K": K, "dropped_resamples": dropped})
