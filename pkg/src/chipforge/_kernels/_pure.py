"""Pure-Python kernels; the Cython build in _speedups.pyx mirrors these exactly.

Both implementations must return bit-identical results: the embedding feeds
persisted retrieval decisions and the cycle model feeds frozen test oracles.
"""

from __future__ import annotations

import math

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def trigram_embed(text: str, dim: int) -> list[float]:
    """Hashed character-trigram term frequencies, L2-normalized.

    Trigrams are hashed with 64-bit FNV-1a over their UTF-8 bytes into
    ``dim`` buckets. Texts shorter than three characters map to the zero
    vector.
    """
    counts = [0] * dim
    n = len(text)
    if n >= 3:
        for i in range(n - 2):
            tri = text[i : i + 3].encode("utf-8")
            h = _FNV_OFFSET
            for b in tri:
                h = ((h ^ b) * _FNV_PRIME) & _MASK64
            counts[h % dim] += 1
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return [0.0] * dim
    return [c / norm for c in counts]


def matmul_cycles(m: int, k: int, n: int, rows: int, cols: int, n_arrays: int) -> int:
    """Cycle count for an MxKxN matmul tiled onto ``n_arrays`` rows x cols arrays.

    Each tile costs K + rows + cols - 1 cycles (wavefront fill, K beats,
    drain); tiles are distributed across arrays with a ceiling.
    """
    tiles = ((m + rows - 1) // rows) * ((n + cols - 1) // cols)
    per_tile = k + rows + cols - 1
    return ((tiles + n_arrays - 1) // n_arrays) * per_tile
