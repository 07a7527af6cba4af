"""Counter-based random streams, one per (seed, path index).

A path draws the same normals whichever block or thread simulates it, so ensembles are
bit-identical for any block size and worker count.
"""

import numpy as np

KEY_BITS = 64


def path_stream(seed: int, path_index: int) -> np.random.Generator:
    """Philox stream keyed by the 128-bit value (path_index, seed)."""
    return np.random.Generator(np.random.Philox(key=(path_index << KEY_BITS) | seed))


def block_normals(seed: int, start: int, stop: int, n_steps: int) -> np.ndarray:
    """Standard normals of shape (stop - start, n_steps, 2) for paths start..stop-1."""
    out = np.empty((stop - start, n_steps, 2))
    for row, path_index in enumerate(range(start, stop)):
        out[row] = path_stream(seed, path_index).standard_normal((n_steps, 2))
    return out
