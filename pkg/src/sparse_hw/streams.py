"""Counter-based random streams.

Every stochastic routine in this package draws from a Philox generator
keyed by (seed, stream_id).  Philox is counter-based, so a stream is a
pure function of its key: the same (seed, stream_id) always reproduces
the same sample sequence, and distinct stream ids are statistically
independent.  Chunked Monte Carlo loops assign stream id = chunk index,
which makes results independent of how many worker threads consume the
chunks.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Return the generator for (seed, stream_id).

    Bit-identical across calls and platforms: the Philox key is the pair
    (seed mod 2^64, stream_id mod 2^64) and the counter starts at zero.
    """
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(n_total: int, chunk_size: int) -> list[int]:
    """Split n_total into fixed-size chunks (last one ragged)."""
    if n_total < 0:
        raise ValueError("n_total must be nonnegative")
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    out = []
    left = n_total
    while left > 0:
        take = min(chunk_size, left)
        out.append(take)
        left -= take
    return out
