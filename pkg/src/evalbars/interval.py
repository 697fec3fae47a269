"""Interval and posterior-sample containers plus empirical quantiles."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Any

import numpy as np

from evalbars.errors import DomainError


@dataclass(frozen=True)
class Interval:
    """A two-sided interval at nominal level ``level`` (the ``1 - alpha``).

    ``diagnostics`` carries method-specific flags such as ``zero_width``,
    ``out_of_range``, ``upper_infinite`` or an effective sample size.
    """

    lower: float
    upper: float
    level: float
    method: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise DomainError(f"{self.method}: interval bound is NaN")
        if self.lower > self.upper:
            raise DomainError(f"{self.method}: lower {self.lower} > upper {self.upper}")
        if not 0.0 < self.level < 1.0:
            raise DomainError(f"level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def clamped(self, lo: float = 0.0, hi: float = 1.0) -> "Interval":
        """Copy restricted to ``[lo, hi]``; flags ``clamped`` when a bound moved."""
        new_lower = min(max(self.lower, lo), hi)
        new_upper = min(max(self.upper, lo), hi)
        moved = new_lower != self.lower or new_upper != self.upper
        diagnostics = dict(self.diagnostics, clamped=moved)
        return replace(self, lower=new_lower, upper=new_upper, diagnostics=diagnostics)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "level": self.level,
            "lower": self.lower,
            "upper": self.upper,
            "width": self.width,
            "diagnostics": dict(self.diagnostics),
        }


def proportion_flags(lower: float, upper: float) -> dict[str, bool]:
    """Pathology flags for an interval on a probability."""
    return {
        "zero_width": bool(upper - lower == 0.0),
        "out_of_range": bool(lower < 0.0 or upper > 1.0),
    }


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Draws of a scalar quantity, optionally with normalized importance weights."""

    draws: np.ndarray
    weights: np.ndarray | None = None
    ess: float | None = None

    def __post_init__(self) -> None:
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 1:
            raise DomainError("draws must be one-dimensional")
        object.__setattr__(self, "draws", draws)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != draws.shape:
                raise DomainError("weights must match draws in length")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise DomainError("weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weights", w)
            if self.ess is None:
                object.__setattr__(self, "ess", effective_sample_size(w))
        elif self.ess is None:
            object.__setattr__(self, "ess", float(draws.size))
        if self.ess is not None and self.ess > draws.size * (1 + 1e-12):
            raise DomainError("ess cannot exceed the number of draws")

    def __len__(self) -> int:
        return int(self.draws.size)

    def mean(self) -> float:
        finite = np.isfinite(self.draws)
        if self.weights is None:
            return float(np.mean(self.draws[finite]))
        w = self.weights[finite]
        return float(np.sum(w * self.draws[finite]) / np.sum(w))


def effective_sample_size(weights: np.ndarray) -> float:
    """``1 / sum(w^2)`` for normalized weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def empirical_quantiles(draws: np.ndarray, probs, *, presorted: bool = False) -> np.ndarray:
    """Linear-interpolation quantiles (numpy's default rule) that tolerate infinities.

    Interpolating between two equal order statistics returns that value, so
    ``+inf`` draws yield ``+inf`` quantiles instead of NaN.
    """
    x = np.asarray(draws, dtype=float)
    if not presorted:
        x = np.sort(x)
    n = x.size
    if n == 0:
        raise DomainError("no draws to take quantiles of")
    pos = np.asarray(probs, dtype=float) * (n - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    xl = x[lo]
    xh = x[hi]
    with np.errstate(invalid="ignore"):
        out = xl + (xh - xl) * frac
    same = (xl == xh) | (frac == 0.0)
    return np.where(same, xl, out)


def weighted_quantiles(draws: np.ndarray, weights: np.ndarray, probs) -> np.ndarray:
    """Quantiles of a weighted discrete distribution (inverse of the weighted CDF)."""
    order = np.argsort(draws, kind="stable")
    x = np.asarray(draws, dtype=float)[order]
    cdf = np.cumsum(np.asarray(weights, dtype=float)[order])
    cdf /= cdf[-1]
    probs = np.asarray(probs, dtype=float)
    idx = np.searchsorted(cdf, probs, side="left")
    return x[np.minimum(idx, x.size - 1)]


def importance_quantiles(values: np.ndarray, weights: np.ndarray, probs, gen, resample: bool = True) -> np.ndarray:
    """Quantiles of an importance-weighted sample.

    With ``resample`` the sample is first resampled with replacement in
    proportion to ``weights`` (same size as the input); otherwise weighted
    quantiles are taken directly.
    """
    if resample:
        idx = gen.choice(values.size, size=values.size, replace=True, p=weights)
        return empirical_quantiles(values[idx], probs)
    return weighted_quantiles(values, weights, probs)
