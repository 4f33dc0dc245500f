"""Explicit, reproducible random streams.

Nothing in the package touches numpy's global RNG. Callers pass either a
`RngStream`, a ``numpy.random.Generator`` or an integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "as_generator"]

_U64 = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream-id) pair naming one independent PCG64 stream.

    Streams with the same seed and different ids are derived through
    ``SeedSequence`` spawn keys, so they are statistically independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of the stream."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)) and not isinstance(rng, bool):
        return RngStream(int(rng)).generator()
    raise TypeError(f"expected RngStream, numpy Generator or int seed, got {type(rng).__name__}")
