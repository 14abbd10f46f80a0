"""Counter-based random streams.

Each batch of draws owns a Philox stream addressed by ``(seed, *key, batch)``.
Results are concatenated in batch order, so a run gives the same numbers
whatever the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
import zlib

import numpy as np

BATCH_SIZE = 1 << 14


def stream(seed, *key):
    """Independent generator for ``seed`` and an integer key path."""
    if seed is None:
        raise ValueError("a seed is required for stochastic computations")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def label_key(label):
    """Stable 32-bit integer for a string label (model ids, check ids)."""
    return zlib.crc32(str(label).encode("utf-8"))


def batch_sizes(n, batch_size=BATCH_SIZE):
    full, rest = divmod(int(n), batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def draw_batched(draw, n, seed, key=(), threads=1, batch_size=BATCH_SIZE):
    """Call ``draw(rng, m)`` on fixed-size batches and concatenate.

    ``draw`` returns an array or a tuple of arrays with leading axis ``m``.
    """
    sizes = batch_sizes(n, batch_size)

    def job(i):
        return draw(stream(seed, *key, i), sizes[i])

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    if not parts:
        return np.empty(0)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(cols) for cols in zip(*parts))
    return np.concatenate(parts)
