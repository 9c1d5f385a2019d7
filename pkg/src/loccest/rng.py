"""Counter-based random streams for reproducible shot sampling.

Every shot block ``b`` under master seed ``s`` draws from its own Philox4x64
stream keyed by ``(s, b)``. Streams never overlap and do not depend on the
order in which blocks are generated, so parallel sampling gives the same
bits as a serial loop.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ValidationError

BLOCK_SHOTS = 10_000
_MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    return seed


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def split_seed(seed: int, index: int) -> int:
    """Child seed for sub-experiment ``index`` (e.g. one moment order)."""
    return splitmix64(check_seed(seed) ^ splitmix64(int(index)))


def block_stream(seed: int, block: int) -> np.random.Philox:
    return np.random.Philox(key=check_seed(seed) | (int(block) << 64))


def uniforms(seed: int, block: int, n: int) -> np.ndarray:
    """``n`` doubles in [0, 1) from the top 53 bits of each raw draw."""
    raw = block_stream(seed, block).random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def block_sizes(shots: int, block: int = BLOCK_SHOTS) -> list[int]:
    full, rest = divmod(int(shots), block)
    return [block] * full + ([rest] if rest else [])


def categorical(probs, shots: int, seed: int, workers: int = 1) -> np.ndarray:
    """Per-shot outcome indices drawn by inverse-CDF lookup, block by block."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0
    sizes = block_sizes(shots)

    def draw(b):
        return np.searchsorted(cdf, uniforms(seed, b, sizes[b]), side="right").astype(np.int8)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, range(len(sizes))))
    else:
        parts = [draw(b) for b in range(len(sizes))]
    if not parts:
        return np.zeros(0, dtype=np.int8)
    return np.concatenate(parts)
