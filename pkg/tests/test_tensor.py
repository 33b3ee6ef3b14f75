"""Core data model: evaluation, Hamming geometry, seeded samplers."""

import math

import numpy as np
import pytest

from chaos_resilience import (
    CoeffTensor,
    DimensionMismatchError,
    SignEnsemble,
    block_tensor,
    chaos_restriction_vector,
    evaluate_chaos,
    hamming_distance,
    identity_matrix,
    is_ternary_vector,
    sample_ensemble,
    sample_lazy,
)
from chaos_resilience.tensor import rng_from

from conftest import random_corpus


def ones_ensemble(dims):
    return SignEnsemble(tuple(np.ones(n, dtype=np.int8) for n in dims))


class TestEvaluateChaos:
    def test_identity_all_ones(self):
        assert evaluate_chaos(identity_matrix(3), ones_ensemble((3, 3))) == 3.0

    def test_one_flip(self):
        ensemble = ones_ensemble((3, 3)).with_flip(2, 0)
        assert evaluate_chaos(identity_matrix(3), ensemble) == 1.0

    def test_block_tensor_all_ones(self):
        # direct summation oracle: 2 blocks x 2^3 entries, each contributing +1
        f = block_tensor(4, 2, 3)
        expected = sum(f.entries().values())
        assert expected == 16.0
        assert evaluate_chaos(f, ones_ensemble(f.dims)) == 16.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(DimensionMismatchError):
            evaluate_chaos(identity_matrix(3), ones_ensemble((3, 4)))

    def test_single_nonzero_is_product_of_signs(self):
        f = CoeffTensor.from_entries((2, 3, 2), {(2, 3, 1): 5.0})
        for seed in range(10):
            ensemble = sample_ensemble(f.dims, seed)
            s = ensemble.vectors
            assert evaluate_chaos(f, ensemble) == 5.0 * s[0][1] * s[1][2] * s[2][0]

    def test_multilinearity_flip_matches_contraction(self):
        # flipping one coordinate subtracts twice its restriction contraction
        for seed, f in random_corpus(12, degrees=(2, 3), sizes=(2, 3, 4)):
            if f.nnz == 0:
                continue
            ensemble = sample_ensemble(f.dims, seed + 500)
            base = evaluate_chaos(f, ensemble)
            for i in range(1, f.degree + 1):
                v = chaos_restriction_vector(f, i, ensemble)
                for j in range(f.dims[i - 1]):
                    flipped = ensemble.with_flip(i, j)
                    expected = base - 2.0 * ensemble.vectors[i - 1][j] * v[j]
                    assert evaluate_chaos(f, flipped) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_degree_zero_tensor(self):
        f = CoeffTensor.from_entries((), {(): 7.0})
        assert evaluate_chaos(f, SignEnsemble(())) == 7.0


class TestCoeffTensor:
    def test_matrix_round_trip(self):
        M = np.array([[1.0, 0.0], [2.0, -3.0]])
        f = CoeffTensor.from_matrix(M)
        assert np.array_equal(f.to_matrix(), M)

    def test_sparse_holds_no_zeros(self):
        f = CoeffTensor.from_entries((2, 2), {(1, 1): 0.0, (2, 2): 1.0})
        assert f.nnz == 1

    def test_out_of_range_entry_rejected(self):
        with pytest.raises(ValueError):
            CoeffTensor.from_entries((2, 2), {(3, 1): 1.0})

    def test_dense_opt_in_limited_to_low_degree(self):
        with pytest.raises(ValueError):
            CoeffTensor.from_dense(np.ones((2, 2, 2, 2)), storage="dense")

    def test_entries_are_one_based(self):
        f = CoeffTensor.from_entries((2, 2), {(1, 2): 4.0})
        assert f.entries() == {(1, 2): 4.0}


class TestHamming:
    def test_identical_is_zero(self):
        e = sample_ensemble((3, 4), 1)
        assert hamming_distance(e, e) == 0

    def test_counts_flips(self):
        a = SignEnsemble((np.array([1, 1], np.int8), np.array([1, 1], np.int8)))
        b = SignEnsemble((np.array([-1, 1], np.int8), np.array([1, -1], np.int8)))
        assert hamming_distance(a, b) == 2

    def test_symmetry_on_seeded_pairs(self):
        for t in range(100):
            a = sample_ensemble((4, 3), 2 * t)
            b = sample_ensemble((4, 3), 2 * t + 1)
            assert hamming_distance(a, b) == hamming_distance(b, a)

    def test_triangle_inequality(self):
        for t in range(50):
            a, b, c = (sample_ensemble((5,), 3 * t + k) for k in range(3))
            assert hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c)

    def test_mismatch_raises(self):
        with pytest.raises(DimensionMismatchError):
            hamming_distance(sample_ensemble((3,), 0), sample_ensemble((4,), 0))


class TestSamplers:
    def test_ensemble_determinism(self):
        a = sample_ensemble((5, 7), 42)
        b = sample_ensemble((5, 7), 42)
        assert all(np.array_equal(u, v) for u, v in zip(a.vectors, b.vectors))

    def test_ensemble_entries_are_signs(self):
        e = sample_ensemble((2, 2, 2), 9)
        for v in e.vectors:
            assert set(np.unique(v)) <= {-1, 1}

    def test_ensemble_clt_mean(self):
        # 4 standard errors of the mean of 10^4 signs
        e = sample_ensemble((10_000,), 123)
        assert abs(float(e.vectors[0].astype(float).mean())) <= 4 / math.sqrt(10_000)

    def test_lazy_fractions(self):
        n = 100_000
        v = sample_lazy(n, 7)
        assert is_ternary_vector(v)
        zero_frac = float(np.mean(v == 0))
        plus_frac = float(np.mean(v == 1))
        assert abs(zero_frac - 0.5) <= 4 * math.sqrt(0.25 / n)
        assert abs(plus_frac - 0.25) <= 4 * math.sqrt(0.1875 / n)

    def test_lazy_matches_paired_rademacher_halved_difference(self):
        n = 100_000
        lazy = sample_lazy(n, 11)
        rng = rng_from(12)
        xi = rng.integers(0, 2, n) * 2 - 1
        xi2 = rng.integers(0, 2, n) * 2 - 1
        derived = (xi - xi2) // 2
        assert is_ternary_vector(derived)
        for value, p in ((-1, 0.1875), (0, 0.25), (1, 0.1875)):
            se = math.sqrt(2 * p / n)  # combined binomial SE of both estimates
            a = float(np.mean(lazy == value))
            b = float(np.mean(derived == value))
            assert abs(a - b) <= 4 * se
