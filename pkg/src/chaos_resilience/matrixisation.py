"""Structural rearrangements of a coefficient tensor.

Three transforms live here:

* slot matrixisation -- rearrange a degree-d tensor into the n_i x (prod of
  the other mode sizes) matrix A_i whose rows are indexed by slot i, so that
  the chaos value factors as  s_i^T A_i vec(rest)  for every ensemble;
* restrictions -- fix the slots in a dimension set I to directions d_I and
  keep the inherited lower-degree tensor;
* the restriction vector v[k] = (chaos with slot i pinned to direction k),
  which equals A_i times the vectorized remaining ensemble.

The column ordering of A_i is row-major over the remaining index positions
with the last position fastest, and the vectorization of the remaining
ensemble uses the same ordering, which is all the factorization identity
needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .tensor import CoeffTensor, SignEnsemble

__all__ = [
    "Matrixisation",
    "matrixise",
    "vec_without_slot",
    "restrict",
    "max_restriction_frobenius",
    "restriction_sup_norm",
    "chaos_restriction_vector",
]


@dataclass(frozen=True)
class Matrixisation:
    """Sparse slot-i rearrangement of a coefficient tensor.

    ``rows`` holds the slot-i indices of the nonzeros, ``cols`` the raveled
    remaining indices (row-major, last fastest), ``other_idx`` the unraveled
    remaining index rows.  The implied Gram matrix A^T A is never formed
    densely; consumers walk nonzero columns grouped by shared row instead.
    """

    slot: int
    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    other_dims: tuple[int, ...]
    other_idx: np.ndarray

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.shape[1]:
            raise DimensionMismatchError(
                f"vector of length {x.shape[0]} against matrix {self.shape}"
            )
        return np.bincount(self.rows, weights=self.vals * x[self.cols], minlength=self.shape[0])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        out[self.rows, self.cols] = self.vals
        return out

    def row_groups(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """Nonzeros grouped by row: (row, remaining-index rows, values).

        Entries within a group are sorted by column, so iteration order is
        canonical regardless of how the tensor was built.
        """
        order = np.lexsort((self.cols, self.rows))
        rows = self.rows[order]
        groups = []
        for start, stop in _runs(rows):
            sel = order[start:stop]
            groups.append((int(rows[start]), self.other_idx[sel], self.vals[sel]))
        return groups


def _runs(sorted_arr):
    """(start, stop) pairs of equal-value runs in a sorted array."""
    if sorted_arr.shape[0] == 0:
        return
    breaks = np.flatnonzero(np.diff(sorted_arr)) + 1
    edges = [0, *breaks.tolist(), sorted_arr.shape[0]]
    for s, t in zip(edges[:-1], edges[1:]):
        yield s, t


def _check_slot(f: CoeffTensor, i: int) -> int:
    if not 1 <= i <= f.degree:
        raise ValueError(f"slot {i} out of range for degree {f.degree}")
    return i - 1


def _check_dimension_set(f: CoeffTensor, I) -> tuple[int, ...]:
    I = tuple(sorted(set(int(j) for j in I)))
    if not I:
        raise ValueError("the dimension set must be nonempty")
    if any(not 1 <= j <= f.degree for j in I):
        raise ValueError(f"dimension set {I} out of range for degree {f.degree}")
    return I


def matrixise(f: CoeffTensor, i: int) -> Matrixisation:
    """Slot-i matrixisation; cached on the tensor, which is immutable."""
    p = _check_slot(f, i)
    cached = f._cache.get(("matrixisation", i))
    if cached is not None:
        return cached
    other = [q for q in range(f.degree) if q != p]
    other_dims = tuple(f.dims[q] for q in other)
    other_idx = f.idx[:, other] if f.nnz else np.zeros((0, len(other)), dtype=np.int64)
    if other_dims:
        cols = np.ravel_multi_index(tuple(other_idx.T), other_dims) if f.nnz else np.zeros(0, dtype=np.int64)
        width = int(np.prod(other_dims))
    else:
        cols = np.zeros(f.nnz, dtype=np.int64)
        width = 1
    result = Matrixisation(
        slot=i,
        shape=(f.dims[p], width),
        rows=f.idx[:, p].copy() if f.nnz else np.zeros(0, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=f.vals.copy(),
        other_dims=other_dims,
        other_idx=np.asarray(other_idx, dtype=np.int64),
    )
    f._cache[("matrixisation", i)] = result
    return result


def vec_without_slot(ensemble: SignEnsemble, i: int) -> np.ndarray:
    """Vectorized outer product of all ensemble members except slot i.

    Uses the same row-major/last-fastest ordering as the matrixisation
    columns, so  signs_i @ matrixise(f, i).matvec(vec)  reproduces the chaos.
    """
    rest = [v for p, v in enumerate(ensemble.vectors, start=1) if p != i]
    if not rest:
        return np.ones(1, dtype=np.float64)
    out = rest[0].astype(np.float64)
    for v in rest[1:]:
        out = np.multiply.outer(out, v.astype(np.float64))
    return out.ravel()


def restrict(f: CoeffTensor, I, d_I) -> CoeffTensor:
    """Fix the slots in I to the 1-based directions d_I; keep the slice.

    Restricting every slot yields a degree-0 tensor holding the single
    selected coefficient.
    """
    I = _check_dimension_set(f, I)
    d_I = tuple(int(v) for v in (d_I if isinstance(d_I, (tuple, list)) else (d_I,)))
    if len(d_I) != len(I):
        raise ValueError("directions must match the dimension set in length")
    for j, v in zip(I, d_I):
        if not 1 <= v <= f.dims[j - 1]:
            raise ValueError(f"direction {v} out of range in dimension {j}")
    fixed = [j - 1 for j in I]
    keep_modes = [q for q in range(f.degree) if q + 1 not in I]
    new_dims = tuple(f.dims[q] for q in keep_modes)
    if f.nnz == 0:
        return CoeffTensor._from_internal(new_dims, np.zeros((0, len(new_dims)), np.int64), [])
    mask = np.ones(f.nnz, dtype=bool)
    for q, v in zip(fixed, d_I):
        mask &= f.idx[:, q] == v - 1
    sub_idx = f.idx[np.ix_(mask, keep_modes)] if keep_modes else np.zeros((int(mask.sum()), 0), np.int64)
    return CoeffTensor._from_internal(new_dims, sub_idx, f.vals[mask])


def _restriction_keys(f: CoeffTensor, I) -> tuple[np.ndarray, np.ndarray]:
    """Group nonzeros by their index projection onto the fixed slots of I."""
    fixed = [j - 1 for j in I]
    proj = f.idx[:, fixed]
    keys, inverse = np.unique(proj, axis=0, return_inverse=True)
    return keys, inverse


def max_restriction_frobenius(f: CoeffTensor, I) -> float:
    """max over direction tuples of the restriction Frobenius norm.

    Single pass over the nonzeros accumulating squared sums per fixed-slice
    key; the (prod of n_j for j in I) individual restrictions are never
    materialized.
    """
    I = _check_dimension_set(f, I)
    if f.nnz == 0:
        return 0.0
    _, inverse = _restriction_keys(f, I)
    per_key = np.bincount(inverse, weights=f.vals * f.vals)
    return float(np.sqrt(per_key.max()))


def restriction_sup_norm(f: CoeffTensor, I, ensemble: SignEnsemble) -> float:
    """Largest |restricted chaos value| over all direction tuples for I.

    The ensemble supplies sign vectors for the slots outside I (a full
    ensemble is accepted; the fixed slots' members are ignored).  Computed by
    contracting the free slots first, then maximizing over slice keys.
    """
    I = _check_dimension_set(f, I)
    if f.dims != ensemble.dims:
        raise DimensionMismatchError(
            f"tensor dims {f.dims} do not match ensemble dims {ensemble.dims}"
        )
    if f.nnz == 0:
        return 0.0
    weights = f.vals.copy()
    for q in range(f.degree):
        if q + 1 not in I:
            weights *= ensemble.vectors[q][f.idx[:, q]]
    _, inverse = _restriction_keys(f, I)
    sums = np.bincount(inverse, weights=weights)
    return float(np.abs(sums).max())


def chaos_restriction_vector(f: CoeffTensor, i: int, ensemble: SignEnsemble) -> np.ndarray:
    """Vector whose k-th entry fixes slot i to direction k and contracts the rest.

    Equals matrixise(f, i) applied to the vectorized remaining ensemble.
    """
    p = _check_slot(f, i)
    if f.dims != ensemble.dims:
        raise DimensionMismatchError(
            f"tensor dims {f.dims} do not match ensemble dims {ensemble.dims}"
        )
    if f.nnz == 0:
        return np.zeros(f.dims[p], dtype=np.float64)
    weights = f.vals.copy()
    for q in range(f.degree):
        if q != p:
            weights *= ensemble.vectors[q][f.idx[:, q]]
    return np.bincount(f.idx[:, p], weights=weights, minlength=f.dims[p])
