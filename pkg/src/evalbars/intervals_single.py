"""Intervals for a single model's accuracy on IID binary outcomes.

Each method has two entry points:

* ``<name>_bounds(s, n, levels, ...)`` works on sufficient statistics and an
  array of levels at once, returning ``(lower, upper)`` arrays. The simulation
  harness uses these.
* ``<name>_interval(y, level, ...)`` takes a :class:`BinaryEvalVector` and
  returns an :class:`Interval` with diagnostics.

CLT and t intervals are returned unclamped so that bounds outside ``[0, 1]``
stay visible; call :meth:`Interval.clamped` for the clipped variant.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri, stdtrit

from evalbars.data import BinaryEvalVector
from evalbars.errors import DomainError, EmptyDataError, InsufficientDataError
from evalbars.interval import Interval, empirical_quantiles, proportion_flags
from evalbars.statfn import as_generator
from evalbars.statfn.special import _beta_quantile

DEFAULT_BOOTSTRAP_K = 10_000


def _levels(levels) -> np.ndarray:
    lv = np.atleast_1d(np.asarray(levels, dtype=float))
    if np.any(~((lv > 0.0) & (lv < 1.0))):
        raise DomainError("levels must lie strictly between 0 and 1")
    return lv


def normal_critical(levels) -> np.ndarray:
    """Two-sided standard normal critical value ``z_{alpha/2}`` for each level."""
    return ndtri(0.5 + 0.5 * _levels(levels))


def clt_bounds(s: int, n: int, levels) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise EmptyDataError("CLT interval needs at least one observation")
    z = normal_critical(levels)
    p = s / n
    half = z * np.sqrt(p * (1.0 - p) / n)
    return p - half, p + half


def t_bounds(s: int, n: int, levels) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise InsufficientDataError("t interval needs at least two observations")
    lv = _levels(levels)
    t = stdtrit(n - 1, 0.5 + 0.5 * lv)
    p = s / n
    sample_var = n * p * (1.0 - p) / (n - 1)
    half = t * np.sqrt(sample_var / n)
    return p - half, p + half


def wilson_bounds(s: int, n: int, levels) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise EmptyDataError("Wilson interval needs at least one observation")
    z = normal_critical(levels)
    p = s / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = (z / (2.0 * n)) / denom * np.sqrt(4.0 * n * p * (1.0 - p) + z2)
    # The algebra lands on 0 or 1 for s in {0, n}; clip the last-ulp residue.
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def clopper_pearson_bounds(s: int, n: int, levels) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise EmptyDataError("Clopper-Pearson interval needs at least one observation")
    alpha = 1.0 - _levels(levels)
    lower = np.zeros_like(alpha) if s == 0 else _beta_quantile(alpha / 2.0, s, n - s + 1)
    upper = np.ones_like(alpha) if s == n else _beta_quantile(1.0 - alpha / 2.0, s + 1, n - s)
    return lower, upper


def bayes_beta_bounds(s: int, n: int, levels, prior: tuple[float, float] = (1.0, 1.0)):
    """Equal-tailed posterior interval under a ``Beta(prior)`` prior (uniform by default)."""
    alpha = 1.0 - _levels(levels)
    a = prior[0] + s
    b = prior[1] + n - s
    return _beta_quantile(alpha / 2.0, a, b), _beta_quantile(1.0 - alpha / 2.0, a, b)


def bootstrap_means(s: int, n: int, k: int, rng) -> np.ndarray:
    """Means of ``k`` with-replacement resamples of a 0/1 vector with ``s`` ones.

    The mean of a resample of 0/1 outcomes is ``Binomial(n, s/n) / n``, so
    the resamples are drawn from that directly.
    """
    if n < 1:
        raise EmptyDataError("bootstrap needs at least one observation")
    if k < 100:
        raise DomainError("bootstrap needs K >= 100 resamples")
    return as_generator(rng).binomial(n, s / n, size=k) / n


def bootstrap_bounds(s: int, n: int, levels, k: int, rng) -> tuple[np.ndarray, np.ndarray]:
    alpha = 1.0 - _levels(levels)
    means = np.sort(bootstrap_means(s, n, k, rng))
    return (
        empirical_quantiles(means, alpha / 2.0, presorted=True),
        empirical_quantiles(means, 1.0 - alpha / 2.0, presorted=True),
    )


def _interval(lo, hi, level, method, extra=None) -> Interval:
    diagnostics = proportion_flags(float(lo[0]), float(hi[0]))
    if extra:
        diagnostics.update(extra)
    return Interval(float(lo[0]), float(hi[0]), level, method, diagnostics)


def clt_interval(y: BinaryEvalVector, level: float = 0.95) -> Interval:
    """Wald interval ``p ± z * sqrt(p(1-p)/N)``; can be zero-width or leave [0, 1]."""
    lo, hi = clt_bounds(y.S, y.N, level)
    return _interval(lo, hi, level, "clt")


def t_interval(y: BinaryEvalVector, level: float = 0.95) -> Interval:
    lo, hi = t_bounds(y.S, y.N, level)
    return _interval(lo, hi, level, "t")


def wilson_interval(y: BinaryEvalVector, level: float = 0.95) -> Interval:
    lo, hi = wilson_bounds(y.S, y.N, level)
    return _interval(lo, hi, level, "wilson")


def clopper_pearson_interval(y: BinaryEvalVector, level: float = 0.95) -> Interval:
    lo, hi = clopper_pearson_bounds(y.S, y.N, level)
    return _interval(lo, hi, level, "cp")


def bootstrap_interval(
    y: BinaryEvalVector, level: float = 0.95, K: int = DEFAULT_BOOTSTRAP_K, rng=None
) -> Interval:
    """Percentile bootstrap with ``K`` resamples.

    Constant data gives a zero-width interval at the constant rather than an error.
    """
    if rng is None:
        raise DomainError("bootstrap_interval needs an explicit rng stream")
    lo, hi = bootstrap_bounds(y.S, y.N, level, K, rng)
    return _interval(lo, hi, level, "bootstrap", {"K": K})


def bayes_beta_interval(y: BinaryEvalVector, level: float = 0.95) -> Interval:
    """Equal-tailed credible interval of the ``Beta(1 + S, 1 + N - S)`` posterior.

    Works for ``N = 0`` (returns the prior interval).
    """
    lo, hi = bayes_beta_bounds(y.S, y.N, level)
    return _interval(lo, hi, level, "bayes", {"posterior": (1 + y.S, 1 + y.N - y.S)})
