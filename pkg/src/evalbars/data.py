"""Domain values for evaluation outcomes.

These are thin validated wrappers around numpy arrays. They are immutable by
convention (arrays are marked read-only) and compare by value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evalbars.errors import DomainError


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        bad = int(np.flatnonzero((arr != 0) & (arr != 1))[0])
        raise DomainError(f"{name}[{bad}] = {arr[bad]!r} is not 0 or 1")
    out = arr.astype(np.int8, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BinaryEvalVector:
    """Ordered 0/1 outcomes of one model on ``N`` questions."""

    outcomes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", _as_binary(self.outcomes, "outcomes"))

    @classmethod
    def from_counts(cls, successes: int, n: int) -> "BinaryEvalVector":
        if not 0 <= successes <= n:
            raise DomainError(f"need 0 <= successes <= n, got {successes}/{n}")
        return cls(np.r_[np.ones(successes, np.int8), np.zeros(n - successes, np.int8)])

    @property
    def N(self) -> int:
        return int(self.outcomes.size)

    @property
    def S(self) -> int:
        return int(self.outcomes.sum(dtype=np.int64))

    @property
    def mean(self) -> float:
        return self.S / self.N

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryEvalVector):
            return NotImplemented
        return np.array_equal(self.outcomes, other.outcomes)

    def __hash__(self) -> int:
        return hash(self.outcomes.tobytes())


@dataclass(frozen=True, eq=False)
class PairedEvalData:
    """Two models evaluated on the same ``N`` questions.

    ``S``: both correct, ``T``: only A correct, ``U``: only B correct,
    ``V``: neither.
    """

    y_a: BinaryEvalVector
    y_b: BinaryEvalVector

    def __post_init__(self) -> None:
        if not isinstance(self.y_a, BinaryEvalVector):
            object.__setattr__(self, "y_a", BinaryEvalVector(self.y_a))
        if not isinstance(self.y_b, BinaryEvalVector):
            object.__setattr__(self, "y_b", BinaryEvalVector(self.y_b))
        if self.y_a.N != self.y_b.N:
            raise DomainError(f"paired vectors differ in length: {self.y_a.N} vs {self.y_b.N}")

    @classmethod
    def from_counts(cls, S: int, T: int, U: int, V: int) -> "PairedEvalData":
        if min(S, T, U, V) < 0:
            raise DomainError("contingency counts must be nonnegative")
        a = np.r_[np.ones(S + T, np.int8), np.zeros(U + V, np.int8)]
        b = np.r_[np.ones(S, np.int8), np.zeros(T, np.int8), np.ones(U, np.int8), np.zeros(V, np.int8)]
        return cls(BinaryEvalVector(a), BinaryEvalVector(b))

    @property
    def N(self) -> int:
        return self.y_a.N

    @property
    def counts(self) -> tuple[int, int, int, int]:
        a = self.y_a.outcomes.astype(np.int64)
        b = self.y_b.outcomes.astype(np.int64)
        s = int(np.sum(a * b))
        t = int(np.sum(a)) - s
        u = int(np.sum(b)) - s
        return s, t, u, self.N - s - t - u

    @property
    def differences(self) -> np.ndarray:
        return self.y_a.outcomes.astype(np.int64) - self.y_b.outcomes.astype(np.int64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PairedEvalData):
            return NotImplemented
        return self.y_a == other.y_a and self.y_b == other.y_b


@dataclass(frozen=True, eq=False)
class ClusteredEvalData:
    """Per-cluster question counts ``sizes`` (N_t) and success counts ``successes`` (Y_t)."""

    sizes: np.ndarray
    successes: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.sizes)
        y = np.asarray(self.successes)
        if n.ndim != 1 or y.shape != n.shape:
            raise DomainError("sizes and successes must be 1-D arrays of equal length")
        if n.size == 0:
            raise DomainError("need at least one cluster")
        if np.any(n != np.floor(n)) or np.any(y != np.floor(y)):
            raise DomainError("cluster counts must be integers")
        n = n.astype(np.int64)
        y = y.astype(np.int64)
        if np.any(n < 1):
            raise DomainError("every cluster needs at least one question")
        if np.any(y < 0) or np.any(y > n):
            bad = int(np.flatnonzero((y < 0) | (y > n))[0])
            raise DomainError(f"cluster {bad}: successes {y[bad]} outside [0, {n[bad]}]")
        n.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "sizes", n)
        object.__setattr__(self, "successes", y)

    @classmethod
    def from_pairs(cls, clusters) -> "ClusteredEvalData":
        pairs = list(clusters)
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @property
    def T(self) -> int:
        return int(self.sizes.size)

    @property
    def N(self) -> int:
        return int(self.sizes.sum())

    @property
    def S(self) -> int:
        return int(self.successes.sum())

    def grouped(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct ``(N_t, Y_t)`` pairs in sorted order with their multiplicities.

        Everything computed from the grouped form is independent of cluster order.
        """
        pairs = np.stack([self.sizes, self.successes], axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        return uniq[:, 0], uniq[:, 1], counts

    def flatten(self) -> BinaryEvalVector:
        """Outcome vector with each cluster's successes listed first."""
        parts = []
        for n, y in zip(self.sizes, self.successes):
            parts.append(np.ones(y, np.int8))
            parts.append(np.zeros(n - y, np.int8))
        return BinaryEvalVector(np.concatenate(parts))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusteredEvalData):
            return NotImplemented
        return np.array_equal(self.sizes, other.sizes) and np.array_equal(self.successes, other.successes)


@dataclass(frozen=True)
class ConfusionCounts:
    n_tp: int
    n_fp: int
    n_fn: int
    n_tn: int

    def __post_init__(self) -> None:
        for name in ("n_tp", "n_fp", "n_fn", "n_tn"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise DomainError(f"{name} must be a nonnegative integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def N(self) -> int:
        return self.n_tp + self.n_fp + self.n_fn + self.n_tn

    def as_array(self) -> np.ndarray:
        return np.array([self.n_tp, self.n_fp, self.n_fn, self.n_tn], dtype=np.int64)
