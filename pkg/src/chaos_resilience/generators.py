"""Input generators used by the command line and the test corpus.

The library operations themselves take only explicit tensors; generators are
deliberately kept out of the core so its API surface stays minimal.
"""

from __future__ import annotations

import itertools

import numpy as np

from .tensor import CoeffTensor, rng_from

__all__ = [
    "identity_matrix",
    "block_matrix",
    "block_tensor",
    "random_sparse",
    "random_sign_matrix",
]


def identity_matrix(n: int) -> CoeffTensor:
    if n < 1:
        raise ValueError("n must be positive")
    idx = np.repeat(np.arange(n, dtype=np.int64)[:, None], 2, axis=1)
    return CoeffTensor._from_internal((n, n), idx, np.ones(n))


def block_matrix(n: int, w: int) -> CoeffTensor:
    """0/1 block-diagonal matrix with square all-ones blocks of width w."""
    if w < 1 or n < 1 or n % w != 0:
        raise ValueError(f"block width must divide the dimension (n={n}, w={w})")
    rows = np.repeat(np.arange(n, dtype=np.int64), w)
    cols = np.repeat((np.arange(n, dtype=np.int64) // w) * w, w) + np.tile(
        np.arange(w, dtype=np.int64), n
    )
    return CoeffTensor._from_internal((n, n), np.stack([rows, cols], axis=1), np.ones(n * w))


def block_tensor(n: int, w: int, d: int, scale: float = 1.0) -> CoeffTensor:
    """Degree-d block-diagonal tensor: constant ``scale`` on each width-w
    diagonal block, zero elsewhere."""
    if d < 1:
        raise ValueError("degree must be positive")
    if w < 1 or n < 1 or n % w != 0:
        raise ValueError(f"block width must divide the dimension (n={n}, w={w})")
    if scale == 0.0:
        raise ValueError("scale must be nonzero")
    rows = []
    for a in range(n // w):
        lo = a * w
        rows.extend(itertools.product(range(lo, lo + w), repeat=d))
    idx = np.asarray(rows, dtype=np.int64).reshape(-1, d)
    return CoeffTensor._from_internal((n,) * d, idx, np.full(idx.shape[0], float(scale)))


def random_sparse(d: int, n: int, density: float, seed: int) -> CoeffTensor:
    """Square degree-d tensor with i.i.d. standard normal entries kept with
    probability ``density``; deterministic under the seed."""
    if d < 1 or n < 1:
        raise ValueError("degree and dimension must be positive")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    rng = rng_from(seed)
    dense = rng.standard_normal((n,) * d)
    dense[rng.random((n,) * d) >= density] = 0.0
    return CoeffTensor.from_dense(dense, storage="sparse")


def random_sign_matrix(n: int, m: int, seed: int) -> CoeffTensor:
    """Dense +-1 matrix, deterministic under the seed."""
    rng = rng_from(seed)
    return CoeffTensor.from_matrix(rng.integers(0, 2, size=(n, m)).astype(np.float64) * 2 - 1)
