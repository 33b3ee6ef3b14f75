"""Shared corpus builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from chaos_resilience import CoeffTensor, random_sparse


def random_corpus(count: int, degrees=(2, 3), sizes=(2, 3, 4), density=0.5, seed_base=0):
    """Deterministic list of (seed, tensor) cycling through degrees and sizes."""
    out = []
    for t in range(count):
        d = degrees[t % len(degrees)]
        n = sizes[(t // len(degrees)) % len(sizes)]
        out.append((seed_base + t, random_sparse(d, n, density, seed_base + t)))
    return out


@pytest.fixture(scope="session")
def small_corpus():
    return [f for _, f in random_corpus(30) if f.nnz > 0]


def dense_of(f: CoeffTensor) -> np.ndarray:
    return f.to_dense()
