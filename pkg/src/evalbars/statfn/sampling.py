"""Seeded random streams and the samplers the generative models need.

An :class:`RngStream` is a value: ``(master_seed, stream_id)``. Turning it into
a generator always replays the same sequence, so a stream can be handed to a
worker thread and reproduced anywhere. Substreams are derived by pure integer
mixing (:meth:`RngStream.child`), never by advancing shared state.
"""

from __future__ import annotations

from dataclasses import dataclass
import zlib

import numpy as np

from evalbars.errors import DomainError

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise DomainError("stream keys must be nonnegative")
    return int(key)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if self.stream_id < 0:
            raise DomainError("stream_id must be nonnegative")

    def child(self, *keys: int | str) -> "RngStream":
        """Derive a substream addressed by ``keys`` (ints or short labels)."""
        z = self.stream_id
        for key in keys:
            z = _splitmix64(z ^ _splitmix64(_key_to_int(key) & _MASK64))
        return RngStream(self.master_seed, z)

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.master_seed & _MASK64, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_beta(a, b, rng, size=None):
    if np.any(~(np.asarray(a) > 0)) or np.any(~(np.asarray(b) > 0)):
        raise DomainError("Beta parameters must be positive")
    return as_generator(rng).beta(a, b, size=size)


def sample_gamma(shape, rate, rng, size=None):
    """Gamma draws in the shape/rate parameterisation (mean ``shape / rate``)."""
    if np.any(~(np.asarray(shape) > 0)) or np.any(~(np.asarray(rate) > 0)):
        raise DomainError("Gamma shape and rate must be positive")
    return as_generator(rng).gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_dirichlet(alphas, rng, size=None):
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size < 2 or np.any(~(alphas > 0)):
        raise DomainError("Dirichlet concentration must be a vector of positive values")
    return as_generator(rng).dirichlet(alphas, size=size)


def sample_binary(p, rng, size=None):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr >= 0.0) & (p_arr <= 1.0))):
        raise DomainError("Bernoulli probability must lie in [0, 1]")
    gen = as_generator(rng)
    return (gen.random(size=size if size is not None else p_arr.shape) < p_arr).astype(np.int8)
