"""Scalar statistics of matrices and tensors that feed the certificates.

For a matrix M the profile collects max |entry|, the largest row/column
Euclidean norms and supports, their symmetrized maxima, the Frobenius norm,
the spectral norm, and the stable rank ||M||_F^2 / ||M||_2^2.  The two
certificate ingredients are

    f_val = min(maxsupp * max_abs, sqrt(log n) * maxdiam) / frobenius
    g_val = min(r, maxsupp) * max_abs / frobenius

with log meaning the natural logarithm throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import CoeffTensor, rng_from

__all__ = [
    "NormProfile",
    "matrix_profile",
    "bound_ingredients_bilinear",
    "tensor_profile",
    "spectral_norm",
]

_POWER_ITERATION_SEED = 0x5EED
_POWER_ITERATION_TOL = 1e-10
_POWER_ITERATION_MAX = 10_000


@dataclass(frozen=True)
class NormProfile:
    """All scalar statistics of a degree-2 tensor used by the certificates.

    ``stable_rank`` is ``None`` for the zero matrix, where the ratio is
    undefined; every other field is then zero.
    """

    frobenius: float
    max_abs: float
    row_sup_l2: float
    col_sup_l2: float
    row_sup_l0: int
    col_sup_l0: int
    maxsupp: int
    maxdiam: float
    spectral: float
    stable_rank: float | None

    def as_dict(self) -> dict:
        return {
            "frobenius": self.frobenius,
            "max_abs": self.max_abs,
            "row_sup_l2": self.row_sup_l2,
            "col_sup_l2": self.col_sup_l2,
            "row_sup_l0": self.row_sup_l0,
            "col_sup_l0": self.col_sup_l0,
            "maxsupp": self.maxsupp,
            "maxdiam": self.maxdiam,
            "spectral": self.spectral,
            "stable_rank": self.stable_rank,
        }


def _coo_matvec(rows, cols, vals, x, n_rows):
    return np.bincount(rows, weights=vals * x[cols], minlength=n_rows)


def spectral_norm(M: CoeffTensor) -> float:
    """Largest singular value by power iteration on M^T M.

    Deterministically seeded start vector; Rayleigh-quotient convergence to
    relative tolerance 1e-10, capped at 1e4 iterations.  Only the top
    singular value is needed anywhere in the package, so no deflation.
    """
    if M.degree != 2:
        raise ValueError("spectral_norm expects a degree-2 tensor")
    if M.nnz == 0:
        return 0.0
    n, m = M.dims
    rows, cols, vals = M.idx[:, 0], M.idx[:, 1], M.vals
    rng = rng_from(_POWER_ITERATION_SEED)
    v = rng.standard_normal(m)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    inc_prev = math.inf
    lam = 0.0
    for _ in range(_POWER_ITERATION_MAX):
        w = _coo_matvec(rows, cols, vals, v, n)          # w = M v
        bv = _coo_matvec(cols, rows, vals, w, m)         # bv = M^T M v
        lam = float(v @ bv)                              # Rayleigh quotient
        norm_bv = np.linalg.norm(bv)
        if norm_bv == 0.0:
            # v landed in the kernel; restart from a fresh direction
            v = rng.standard_normal(m)
            v /= np.linalg.norm(v)
            continue
        v = bv / norm_bv
        # the Rayleigh quotient increases geometrically for a PSD Gram
        # matrix, so the remaining error is about inc * rho / (1 - rho)
        inc = lam - lam_prev
        if inc <= 0.0:
            break
        rho = inc / inc_prev if math.isfinite(inc_prev) and inc_prev > 0 else 0.5
        rho = min(rho, 1.0 - 1e-6)
        if inc * rho / (1.0 - rho) <= _POWER_ITERATION_TOL * abs(lam):
            break
        lam_prev, inc_prev = lam, inc
    return math.sqrt(max(lam, 0.0))


def matrix_profile(M: CoeffTensor) -> NormProfile:
    """Full norm profile of a degree-2 tensor; exact except the spectral norm."""
    if M.degree != 2:
        raise ValueError("matrix_profile expects a degree-2 tensor")
    n, m = M.dims
    if M.nnz == 0:
        return NormProfile(0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0.0, 0.0, None)
    rows, cols, vals = M.idx[:, 0], M.idx[:, 1], M.vals
    sq = vals * vals
    row_sq = np.bincount(rows, weights=sq, minlength=n)
    col_sq = np.bincount(cols, weights=sq, minlength=m)
    row_l0 = np.bincount(rows, minlength=n)
    col_l0 = np.bincount(cols, minlength=m)
    frob = math.sqrt(float(sq.sum()))
    row_sup_l2 = math.sqrt(float(row_sq.max()))
    col_sup_l2 = math.sqrt(float(col_sq.max()))
    row_sup_l0 = int(row_l0.max())
    col_sup_l0 = int(col_l0.max())
    spec = spectral_norm(M)
    return NormProfile(
        frobenius=frob,
        max_abs=float(np.abs(vals).max()),
        row_sup_l2=row_sup_l2,
        col_sup_l2=col_sup_l2,
        row_sup_l0=row_sup_l0,
        col_sup_l0=col_sup_l0,
        maxsupp=max(row_sup_l0, col_sup_l0),
        maxdiam=max(row_sup_l2, col_sup_l2),
        spectral=spec,
        stable_rank=frob * frob / (spec * spec),
    )


def bound_ingredients_bilinear(M: CoeffTensor, n: int, r: int) -> tuple[float, float]:
    """The two normalized ingredients of the bilinear certificate at (n, r)."""
    profile = matrix_profile(M)
    if profile.stable_rank is None:
        raise ValueError("bound ingredients are undefined for the zero matrix")
    if r < 1:
        raise ValueError("r must be at least 1")
    return ingredients_from_profile(profile, n, r)


def ingredients_from_profile(profile: NormProfile, n: int, r: int) -> tuple[float, float]:
    f_val = min(
        profile.maxsupp * profile.max_abs,
        math.sqrt(math.log(n)) * profile.maxdiam,
    ) / profile.frobenius
    g_val = min(r, profile.maxsupp) * profile.max_abs / profile.frobenius
    return f_val, g_val


def tensor_profile(f: CoeffTensor) -> tuple[float, float]:
    """(frobenius, max_abs) of an arbitrary-degree tensor; zero tensor gives (0, 0)."""
    if f.nnz == 0:
        return 0.0, 0.0
    return math.sqrt(float((f.vals * f.vals).sum())), float(np.abs(f.vals).max())
