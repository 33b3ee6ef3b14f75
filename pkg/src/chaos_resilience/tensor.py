"""Coefficient tensors, sign ensembles, and multilinear chaos evaluation.

A degree-d coefficient tensor together with d independent sign vectors
defines the multilinear form

    value = sum_i  f[i_1, ..., i_d] * s_1[i_1] * ... * s_d[i_d],

where each s_p is a vector with entries in {-1, +1}.  Everything downstream
(matrix rearrangements, derivative norms, probability certificates,
exhaustive resilience searches) is built on the two types in this module.

Index conventions: the public API is 1-based, matching the usual
mathematical notation -- slots are numbered 1..d, an index tuple
(i_1, ..., i_d) has i_p in 1..n_p, and the JSON file format uses the same
convention.  Internally, indices are stored 0-based in numpy arrays; the
conversion happens only at the construction/serialization boundary.

Storage is sparse COO (index rows + value array) by default; dense storage
is an explicit opt-in for degree <= 3.  Tensors and ensembles are immutable
after construction, and all randomness is driven by explicit seeds, so every
operation here is safe to call from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "CoeffTensor",
    "SignEnsemble",
    "evaluate_chaos",
    "hamming_distance",
    "sample_ensemble",
    "sample_lazy",
    "is_ternary_vector",
    "rng_from",
]


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, substream...) tuples.

    Derived streams (one per Monte-Carlo trial, say) use the trial index as
    part of the entropy so that trials are independent yet reproducible and
    insensitive to evaluation order.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def _canonical_coo(dims, idx, vals):
    """Validate, drop zeros, and sort a raw 0-based COO representation."""
    d = len(dims)
    vals = np.asarray(vals, dtype=np.float64).reshape(-1)
    idx = np.asarray(idx, dtype=np.int64).reshape(vals.shape[0], d)
    if idx.shape[0] != vals.shape[0]:
        raise ValueError("index rows and values disagree in length")
    if not np.all(np.isfinite(vals)):
        raise ValueError("coefficients must be finite")
    for p, n_p in enumerate(dims):
        if idx.shape[0] and (idx[:, p].min() < 0 or idx[:, p].max() >= n_p):
            raise ValueError(f"index out of range in mode {p + 1} (dims {dims})")
    keep = vals != 0.0
    idx, vals = idx[keep], vals[keep]
    if d == 0:
        if idx.shape[0] > 1:
            raise ValueError("degree-0 tensor admits a single entry")
    elif idx.shape[0]:
        order = np.lexsort(idx.T[::-1])
        idx, vals = idx[order], vals[order]
        if idx.shape[0] > 1 and np.any(np.all(idx[1:] == idx[:-1], axis=1)):
            raise ValueError("duplicate index tuples in sparse tensor")
    idx.setflags(write=False)
    vals.setflags(write=False)
    return idx, vals


@dataclass(frozen=True)
class CoeffTensor:
    """Real coefficient tensor of a multilinear chaos.

    ``dims`` is the mode-size tuple (n_1, ..., n_d); ``idx`` holds the
    0-based index rows of the nonzero coefficients and ``vals`` their values.
    Degree-0 tensors (a lone scalar) are legal: they arise when every slot
    of a tensor is restricted to a fixed direction.
    """

    dims: tuple[int, ...]
    idx: np.ndarray
    vals: np.ndarray
    storage: str = "sparse"
    dense_data: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if any(n <= 0 for n in self.dims):
            raise ValueError("all mode sizes must be positive")
        if self.storage not in ("sparse", "dense"):
            raise ValueError(f"unknown storage mode {self.storage!r}")
        if self.storage == "dense" and self.degree > 3:
            raise ValueError("dense storage is restricted to degree <= 3")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_entries(cls, dims: Iterable[int], entries: Mapping[tuple, float]) -> "CoeffTensor":
        """Build a sparse tensor from a map of 1-based index tuples to values."""
        dims = tuple(int(n) for n in dims)
        d = len(dims)
        rows, vals = [], []
        for key, val in entries.items():
            key = tuple(int(k) for k in (key if isinstance(key, tuple) else (key,)))
            if len(key) != d:
                raise ValueError(f"index tuple {key} has wrong length for degree {d}")
            if any(not (1 <= key[p] <= dims[p]) for p in range(d)):
                raise ValueError(f"index tuple {key} outside dims {dims}")
            rows.append([k - 1 for k in key])
            vals.append(float(val))
        idx = np.asarray(rows, dtype=np.int64).reshape(len(vals), d)
        idx, v = _canonical_coo(dims, idx, vals)
        return cls(dims, idx, v)

    @classmethod
    def from_dense(cls, array, storage: str = "dense") -> "CoeffTensor":
        """Build from a dense ndarray; ``storage='sparse'`` discards the dense copy."""
        arr = np.asarray(array, dtype=np.float64)
        dims = tuple(int(n) for n in arr.shape)
        nz = np.argwhere(arr != 0.0)
        idx, vals = _canonical_coo(dims, nz, arr[tuple(nz.T)] if nz.size else [])
        if storage == "dense":
            data = arr.copy()
            data.setflags(write=False)
            return cls(dims, idx, vals, storage="dense", dense_data=data)
        return cls(dims, idx, vals)

    @classmethod
    def from_matrix(cls, matrix) -> "CoeffTensor":
        """Degree-2 view of a matrix; lossless round trip via :meth:`to_matrix`."""
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("from_matrix expects a 2-d array")
        return cls.from_dense(arr, storage="sparse")

    @classmethod
    def _from_internal(cls, dims, idx0, vals) -> "CoeffTensor":
        """Internal constructor taking 0-based COO data."""
        dims = tuple(int(n) for n in dims)
        idx, v = _canonical_coo(dims, idx0, vals)
        return cls(dims, idx, v)

    # -- views and basics ----------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return int(self.vals.shape[0])

    def entries(self) -> dict[tuple, float]:
        """Nonzero coefficients keyed by 1-based index tuples."""
        return {
            tuple(int(i) + 1 for i in row): float(v)
            for row, v in zip(self.idx, self.vals)
        }

    def to_dense(self) -> np.ndarray:
        if self.dense_data is not None:
            return self.dense_data.copy()
        out = np.zeros(self.dims, dtype=np.float64)
        if self.nnz:
            out[tuple(self.idx.T)] = self.vals
        return out

    def to_matrix(self) -> np.ndarray:
        if self.degree != 2:
            raise ValueError("to_matrix is defined for degree-2 tensors only")
        return self.to_dense()

    def scaled(self, c: float) -> "CoeffTensor":
        return CoeffTensor._from_internal(self.dims, self.idx, self.vals * float(c))

    def has_integer_coefficients(self) -> bool:
        return bool(self.nnz == 0 or np.all(self.vals == np.round(self.vals)))

    def is_square(self) -> bool:
        return len(set(self.dims)) <= 1


@dataclass(frozen=True)
class SignEnsemble:
    """Tuple of d sign vectors, one per tensor slot, entries in {-1,+1}."""

    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for v in self.vectors:
            arr = np.asarray(v, dtype=np.int8)
            if arr.ndim != 1:
                raise ValueError("ensemble members must be 1-d vectors")
            if arr.size and not np.all(np.abs(arr) == 1):
                raise ValueError("ensemble entries must be exactly -1 or +1")
            arr = arr.copy()
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "vectors", tuple(frozen))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(v.shape[0]) for v in self.vectors)

    @property
    def total_coordinates(self) -> int:
        return sum(self.dims)

    def with_flip(self, slot: int, position: int) -> "SignEnsemble":
        """Copy with the sign at (slot, position) flipped; 1-based slot."""
        vecs = [v.copy() for v in self.vectors]
        vecs[slot - 1][position] *= -1
        return SignEnsemble(tuple(vecs))


def _check_dims(f: CoeffTensor, ensemble: SignEnsemble) -> None:
    if f.dims != ensemble.dims:
        raise DimensionMismatchError(
            f"tensor dims {f.dims} do not match ensemble dims {ensemble.dims}"
        )


def evaluate_chaos(f: CoeffTensor, ensemble: SignEnsemble) -> float:
    """Evaluate the multilinear form at a sign ensemble.

    Cost is linear in the number of stored nonzeros.  A degree-0 tensor
    evaluates to its lone scalar regardless of the (empty) ensemble.
    """
    _check_dims(f, ensemble)
    if f.nnz == 0:
        return 0.0
    prod = f.vals.copy()
    for p in range(f.degree):
        prod *= ensemble.vectors[p][f.idx[:, p]]
    return float(prod.sum())


def hamming_distance(a: SignEnsemble, b: SignEnsemble) -> int:
    """Number of coordinates, across all slots, where the ensembles differ."""
    if a.dims != b.dims:
        raise DimensionMismatchError(f"ensemble dims {a.dims} vs {b.dims}")
    return int(sum(np.count_nonzero(u != v) for u, v in zip(a.vectors, b.vectors)))


def sample_ensemble(dims: Iterable[int], seed: int, *stream: int) -> SignEnsemble:
    """Independent uniform +-1 ensemble; identical (dims, seed) gives identical bits."""
    dims = tuple(int(n) for n in dims)
    if any(n <= 0 for n in dims):
        raise ValueError("dims must be positive")
    rng = rng_from(seed, *stream)
    return SignEnsemble(
        tuple((rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1) for n in dims)
    )


def sample_lazy(n: int, seed: int, *stream: int) -> np.ndarray:
    """Lazy sign vector: P(0) = 1/2 and P(+1) = P(-1) = 1/4, i.i.d. entries.

    This is the distribution of (s - s')/2 for two independent uniform signs;
    it shows up when a quadratic form is decoupled into a bilinear one.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = rng_from(seed, *stream)
    quarters = rng.integers(0, 4, size=n, dtype=np.int8)
    out = np.zeros(n, dtype=np.int8)
    out[quarters == 2] = 1
    out[quarters == 3] = -1
    return out


def is_ternary_vector(v) -> bool:
    """True when every entry lies in {-1, 0, +1}."""
    arr = np.asarray(v)
    return bool(np.all(np.isin(arr, (-1, 0, 1))))
