"""Generative models for the five evaluation settings."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from evalbars.data import BinaryEvalVector, ClusteredEvalData, ConfusionCounts, PairedEvalData
from evalbars.errors import DomainError
from evalbars.statfn import as_generator, sample_binary


def _check_n(n: int) -> None:
    if int(n) != n or n < 0:
        raise DomainError(f"N must be a nonnegative integer, got {n!r}")


def gen_iid(theta: float, N: int, rng) -> BinaryEvalVector:
    """``N`` IID Bernoulli(theta) outcomes."""
    _check_n(N)
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return BinaryEvalVector(sample_binary(theta, rng, size=int(N)))


def cluster_sizes_for(N: int, cluster_size: int) -> list[int]:
    """Split ``N`` questions into clusters of ``cluster_size`` plus one remainder cluster."""
    if N < 1 or cluster_size < 1:
        raise DomainError("N and cluster_size must be positive")
    full, rest = divmod(int(N), int(cluster_size))
    return [cluster_size] * full + ([rest] if rest else [])


def gen_clustered(theta: float, d: float, cluster_sizes, rng) -> ClusteredEvalData:
    """Per-cluster ``theta_t ~ Beta(d*theta, d*(1-theta))`` then ``Binomial(N_t, theta_t)``.

    Large ``d`` keeps every ``theta_t`` close to ``theta``; small ``d`` pushes
    clusters towards all-correct or all-wrong.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie strictly inside (0, 1) for a Beta cluster prior, got {theta}")
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    sizes = np.asarray(list(cluster_sizes), dtype=np.int64)
    gen = as_generator(rng)
    theta_t = gen.beta(d * theta, d * (1.0 - theta), size=sizes.size)
    # Tiny shape parameters can underflow; keep every probability usable.
    theta_t = np.nan_to_num(theta_t, nan=theta)
    successes = gen.binomial(sizes, np.clip(theta_t, 0.0, 1.0))
    return ClusteredEvalData(sizes, successes)


def gen_paired(theta_A: float, theta_B: float, rho: float, N: int, rng) -> PairedEvalData:
    """Threshold a correlated bivariate Gaussian at zero.

    Means are ``ndtri(theta)``, so ``P(a_i > 0) = theta_A`` and
    ``P(b_i > 0) = theta_B``; ``rho`` controls how often the models agree.
    """
    _check_n(N)
    for name, value in (("theta_A", theta_A), ("theta_B", theta_B)):
        if not 0.0 < value < 1.0:
            raise DomainError(f"{name} must lie strictly inside (0, 1), got {value}")
    if not -1.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho}")
    gen = as_generator(rng)
    z = gen.standard_normal(size=(int(N), 2))
    a = ndtri(theta_A) + z[:, 0]
    b = ndtri(theta_B) + rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    return PairedEvalData(BinaryEvalVector(a > 0), BinaryEvalVector(b > 0))


def gen_confusion(theta4, N: int, rng) -> ConfusionCounts:
    """Multinomial ``(TP, FP, FN, TN)`` counts of ``N`` categorical outcomes."""
    _check_n(N)
    p = np.asarray(theta4, dtype=float)
    if p.shape != (4,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("theta4 must be a length-4 probability vector")
    counts = as_generator(rng).multinomial(int(N), p / p.sum())
    return ConfusionCounts(*(int(c) for c in counts))
