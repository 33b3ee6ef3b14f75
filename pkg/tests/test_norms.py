"""Norm profiles against independent linear-algebra oracles."""

import math

import numpy as np
import pytest

from chaos_resilience import (
    CoeffTensor,
    block_matrix,
    block_tensor,
    bound_ingredients_bilinear,
    identity_matrix,
    matrix_profile,
    tensor_profile,
)

from conftest import random_corpus


class TestMatrixProfile:
    def test_identity(self):
        p = matrix_profile(identity_matrix(4))
        assert p.frobenius == 2.0
        assert p.max_abs == 1.0
        assert p.row_sup_l2 == 1.0
        assert p.row_sup_l0 == 1
        assert p.spectral == pytest.approx(1.0, rel=1e-10)
        assert p.stable_rank == pytest.approx(4.0, rel=1e-9)

    def test_block_matrix_n6_w2(self):
        # oracle: exact eigendecomposition of the 2x2 all-ones block (spectral 2)
        M = block_matrix(6, 2)
        svd_top = float(np.linalg.svd(M.to_matrix(), compute_uv=False)[0])
        assert svd_top == pytest.approx(2.0, abs=1e-12)
        p = matrix_profile(M)
        assert p.frobenius == pytest.approx(math.sqrt(12), rel=1e-12)
        assert p.maxsupp == 2
        assert p.spectral == pytest.approx(2.0, rel=1e-9)
        assert p.stable_rank == pytest.approx(3.0, rel=1e-9)

    def test_swap_matrix_is_orthogonal(self):
        M = CoeffTensor.from_matrix([[0.0, 1.0], [1.0, 0.0]])
        # oracle: exhaustive unit-vector grid; an orthogonal matrix preserves length
        for theta in np.linspace(0.0, 2 * math.pi, 720, endpoint=False):
            v = np.array([math.cos(theta), math.sin(theta)])
            assert np.linalg.norm(M.to_matrix() @ v) == pytest.approx(1.0, abs=1e-12)
        p = matrix_profile(M)
        assert p.frobenius == pytest.approx(math.sqrt(2), rel=1e-12)
        assert p.spectral == pytest.approx(1.0, rel=1e-9)
        assert p.stable_rank == pytest.approx(2.0, rel=1e-9)

    def test_zero_matrix_undefined_stable_rank(self):
        z = CoeffTensor.from_entries((3, 3), {})
        p = matrix_profile(z)
        assert p.stable_rank is None
        assert p.frobenius == 0.0 and p.spectral == 0.0 and p.maxsupp == 0

    def test_frobenius_is_sum_of_squares(self, small_corpus):
        for f in small_corpus:
            if f.degree != 2:
                continue
            p = matrix_profile(f)
            expected = math.sqrt(float((f.to_dense() ** 2).sum()))
            assert p.frobenius == pytest.approx(expected, rel=1e-12)

    def test_spectral_dominates_random_rayleigh_quotients(self, small_corpus):
        rng = np.random.default_rng(17)
        for f in small_corpus:
            if f.degree != 2 or f.nnz == 0:
                continue
            A = f.to_dense()
            s = matrix_profile(f).spectral
            for _ in range(100):
                v = rng.standard_normal(A.shape[1])
                v /= np.linalg.norm(v)
                assert np.linalg.norm(A @ v) <= s * (1 + 1e-8)

    def test_spectral_matches_svd(self, small_corpus):
        for f in small_corpus:
            if f.degree != 2 or f.nnz == 0:
                continue
            top = float(np.linalg.svd(f.to_dense(), compute_uv=False)[0])
            assert matrix_profile(f).spectral == pytest.approx(top, rel=1e-9)

    def test_norm_chain_inequalities(self, small_corpus):
        for f in small_corpus:
            if f.degree != 2 or f.nnz == 0:
                continue
            A = f.to_dense()
            p = matrix_profile(f)
            rank = np.linalg.matrix_rank(A)
            assert p.spectral <= p.frobenius * (1 + 1e-9)
            assert p.frobenius <= math.sqrt(rank) * p.spectral * (1 + 1e-9)
            assert 1 - 1e-9 <= p.stable_rank <= min(A.shape) + 1e-9

    def test_row_diameter_bounded_by_twice_sup_l2(self, small_corpus):
        for f in small_corpus:
            if f.degree != 2 or f.nnz == 0:
                continue
            A = f.to_dense()
            p = matrix_profile(f)
            diam = max(
                np.linalg.norm(a - b) for a in A for b in A
            )
            assert diam <= 2 * p.row_sup_l2 + 1e-12

    def test_frobenius_support_bound(self, small_corpus):
        # ||M||_F <= sqrt(n * max row support) * ||M||_inf
        for f in small_corpus:
            if f.degree != 2 or f.nnz == 0:
                continue
            p = matrix_profile(f)
            n = f.dims[0]
            assert p.frobenius <= math.sqrt(n * p.row_sup_l0) * p.max_abs + 1e-12


class TestBoundIngredients:
    def test_identity_n4_r3(self):
        f_val, g_val = bound_ingredients_bilinear(identity_matrix(4), n=4, r=3)
        # sqrt(log 4) = 1.177... > 1, so the support branch wins
        assert f_val == pytest.approx(0.5, rel=1e-12)
        assert g_val == pytest.approx(0.5, rel=1e-12)

    def test_block_matrix_g_value(self):
        M = block_matrix(6, 2)
        _, g_val = bound_ingredients_bilinear(M, n=6, r=1)
        assert g_val == pytest.approx(1 / math.sqrt(12), rel=1e-12)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            bound_ingredients_bilinear(CoeffTensor.from_entries((2, 2), {}), n=2, r=1)


class TestTensorProfile:
    def test_block_tensor_frobenius_squared(self):
        frob, max_abs = tensor_profile(block_tensor(4, 2, 3))
        assert frob**2 == pytest.approx(16.0, rel=1e-12)  # (n/w) * w^d
        assert max_abs == 1.0

    def test_zero_tensor(self):
        assert tensor_profile(CoeffTensor.from_entries((2, 2), {})) == (0.0, 0.0)

    def test_single_entry(self):
        f = CoeffTensor.from_entries((3,), {(2,): 5.0})
        assert tensor_profile(f) == (5.0, 5.0)
