"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here, not configured elsewhere.
"""

import itertools
import math
import time

import numpy as np
import pytest

from chaos_resilience import (
    CoeffTensor,
    SignEnsemble,
    atom_probability,
    bilinear_bound,
    bilinear_regime,
    block_matrix,
    block_tensor,
    block_tensor_bound,
    delta_exhaustive,
    evaluate_chaos,
    exact_resilience,
    find_decoupling_partition,
    flip_radius_multilinear,
    gamma_norm,
    gamma_oracle,
    identity_matrix,
    matrixise,
    multilinear_bound,
    quadratic_bound,
    quadratic_normalize,
    random_sign_matrix,
    random_sparse,
    sample_ensemble,
    tensor_profile,
    vec_without_slot,
)
from chaos_resilience.tensor import rng_from


def _announce(number: int, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} — {detail}", flush=True)
    assert passed, f"criterion {number}: {detail}"


def _corpus_100():
    """100 seeded random tensors, d in {2,3}, n in {2,3,4}, density 0.5."""
    out = []
    for t in range(100):
        d = 2 + t % 2
        n = 2 + (t // 2) % 3
        out.append((t, random_sparse(d, n, 0.5, seed=t)))
    return out


def _rel_gap(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def test_criterion_01_matrixisation_identity():
    start = time.monotonic()
    worst = 0.0
    for t, f in _corpus_100():
        for trial in range(20):
            ensemble = sample_ensemble(f.dims, 10_000 + t, trial)
            value = evaluate_chaos(f, ensemble)
            for i in range(1, f.degree + 1):
                m = matrixise(f, i)
                lhs = float(ensemble.vectors[i - 1] @ m.matvec(vec_without_slot(ensemble, i)))
                worst = max(worst, _rel_gap(lhs, value))
    elapsed = time.monotonic() - start
    _announce(
        1,
        worst <= 1e-12 and elapsed < 10.0,
        f"factorization identity on 100x20 instances, worst rel gap {worst:.3e}, "
        f"{elapsed:.1f}s < 10s",
    )


def test_criterion_02_trace_identity():
    worst = 0.0
    for _, f in _corpus_100():
        frob, _ = tensor_profile(f)
        for i in range(1, f.degree + 1):
            A = matrixise(f, i).to_dense()
            worst = max(worst, _rel_gap(float(np.trace(A.T @ A)), frob * frob))
    _announce(2, worst <= 1e-12, f"Gram trace equals squared Frobenius, worst rel gap {worst:.3e}")


def test_criterion_03_gamma_oracle_equivalence():
    start = time.monotonic()
    worst = 0.0
    checked = 0
    for t in range(20):
        if t < 10:
            d, n = 2, 4 + (t % 6)      # (d-1)n in 4..9
        else:
            d, n = 3, 3 + (t % 3)      # (d-1)n in 6..10
        f = random_sparse(d, n, 0.5, seed=5_000 + t)
        if f.nnz == 0:
            continue
        for i in range(1, d + 1):
            for k in range(2, 2 * (d - 1) + 1, 2):
                a = gamma_norm(f, i, k)
                b = gamma_oracle(f, i, k)
                worst = max(worst, abs(a - b) / max(1.0, abs(a), abs(b)))
                checked += 1
    frozen_zero = gamma_norm(identity_matrix(4), 1, 2) == 0.0
    frozen_block = gamma_norm(block_tensor(4, 2, 2), 1, 2) ** 2 == pytest.approx(64.0, rel=1e-12)
    elapsed = time.monotonic() - start
    _announce(
        3,
        worst <= 1e-9 and frozen_zero and frozen_block and elapsed < 300.0,
        f"{checked} (slot, order) pairs, worst rel gap {worst:.3e}; frozen data "
        f"(identity 0, block 64) hold; {elapsed:.1f}s < 300s",
    )


def test_criterion_04_block_closed_forms():
    ok = True
    details = []
    for d, n, w in ((2, 8, 2), (3, 6, 2), (3, 8, 4)):
        f = block_tensor(n, w, d)
        frob, _ = tensor_profile(f)
        ok &= frob**2 == pytest.approx((n / w) * w**d, rel=1e-12)
        for size in range(1, d + 1):
            from chaos_resilience import max_restriction_frobenius

            got = max_restriction_frobenius(f, tuple(range(1, size + 1)))
            ok &= got == pytest.approx(math.sqrt(w ** (d - size)), rel=1e-12)
        for r in (1, 2):
            closed = block_tensor_bound(n, w, d, r)
            materialized = multilinear_bound(f, r)
            per_term = max(
                _rel_gap(closed.terms[key], materialized.terms[key]) for key in closed.terms
            )
            ok &= per_term <= 1e-12
            identity_value = math.sqrt(w / n) * ((1 + 2 * r / math.sqrt(w)) ** d - 1)
            ok &= _rel_gap(materialized.extras["restriction_sum"], identity_value) <= 1e-12
            scaled = block_tensor_bound(n, w, d, r, scale=3.0)
            ok &= scaled.terms == closed.terms and scaled.extras == closed.extras
            details.append(f"(d={d},n={n},w={w},r={r}) per-term {per_term:.1e}")
    _announce(4, ok, "closed form == materialized; restriction-sum identity; "
                     "norm closed forms; scale=3 report identical: " + "; ".join(details[:3]))


def test_criterion_05_flip_radius_domination():
    rng = rng_from(2026)
    violations = 0
    checked = 0
    while checked < 50:
        d = int(rng.integers(2, 4))
        n = int(rng.integers(2, 5))
        f = random_sparse(d, n, 0.6, seed=int(rng.integers(0, 10_000)))
        if f.nnz == 0:
            continue
        ensemble = sample_ensemble(f.dims, 777, checked)
        budgets = [0] * d
        for _ in range(int(rng.integers(1, 3))):
            budgets[int(rng.integers(0, d))] += 1
        delta = delta_exhaustive(f, ensemble, budgets)
        radius = flip_radius_multilinear(f, ensemble, sum(budgets))
        if delta > radius + 1e-12 * max(1.0, radius):
            violations += 1
        checked += 1
    _announce(5, violations == 0, f"exhaustive reach <= flip radius on {checked} instances, "
                                  f"{violations} violations")


def test_criterion_06_exact_resilience_laws():
    zero_law = all(
        exact_resilience(f, e, evaluate_chaos(f, e)).value == 0
        for t in range(10)
        for f in (random_sparse(2, 3, 0.7, seed=t), random_sparse(3, 2, 0.7, seed=t))
        for e in (sample_ensemble(f.dims, 600 + t),)
    )
    law_holds = True
    for n in (2, 3, 4, 5):
        f = identity_matrix(n)
        for bits in range(1 << (2 * n)):
            psi = np.array([1 - 2 * ((bits >> j) & 1) for j in range(n)], np.int8)
            xi = np.array([1 - 2 * ((bits >> (n + j)) & 1) for j in range(n)], np.int8)
            e = SignEnsemble((psi, xi))
            res = exact_resilience(f, e, 0.0)
            if n % 2 == 0:
                law_holds &= res.value == abs(int(psi @ xi)) / 2
            else:
                law_holds &= res.is_infinite  # odd parity never reaches 0
    parity = exact_resilience(
        identity_matrix(3), SignEnsemble((np.ones(3, np.int8), np.ones(3, np.int8))), 4.0
    ).is_infinite
    _announce(6, zero_law and law_holds and parity,
              "res=0 iff on level set; res_0 = |psi.xi|/2 exhaustively (even n <= 5, "
              "odd n unreachable); parity-blocked targets are infinite")


def test_criterion_07_identity_statistics():
    exact = atom_probability(identity_matrix(4), "exact")
    mc = atom_probability(identity_matrix(4), "montecarlo", budget=2000, seed=42)
    atom_ok = exact.value == 0.375 and abs(mc.value - 0.375) <= 4 * mc.stderr

    # Trend of res_0 over n in {4, 8, 12, 16} by meet-in-the-middle.  The
    # exact median of |psi.xi|/2 equals 1 for every one of these sizes
    # (P(|psi.xi| <= 2) stays above 1/2 until n ~ 24), so the monotone-trend
    # assertion is: medians nondecreasing, means strictly increasing with a
    # >= 3 SE endpoint separation -- no constant asserted.
    trials = 500
    medians, means, ses = [], [], []
    for n in (4, 8, 12, 16):
        f = identity_matrix(n)
        values = np.array([
            exact_resilience(f, sample_ensemble((n, n), 2026, t), 0.0,
                             method="meet-in-middle").value
            for t in range(trials)
        ])
        medians.append(float(np.median(values)))
        means.append(float(values.mean()))
        ses.append(float(values.std(ddof=1) / math.sqrt(trials)))
    medians_monotone = all(b >= a for a, b in zip(medians, medians[1:]))
    means_growing = all(b > a for a, b in zip(means, means[1:]))
    separation = (means[-1] - means[0]) >= 3 * math.hypot(ses[-1], ses[0])
    _announce(
        7,
        atom_ok and medians_monotone and means_growing and separation,
        f"atom 0.375 exact, MC {mc.value:.3f}±{mc.stderr:.3f}; medians {medians} "
        f"nondecreasing; means {[f'{m:.2f}' for m in means]} strictly increasing "
        f"({(means[-1] - means[0]) / math.hypot(ses[-1], ses[0]):.1f} SE separation)",
    )


def test_criterion_08_dudley_ceiling():
    violations = 0
    trials = 10_000
    for t in range(20):
        M = random_sign_matrix(12, 12, seed=9_000 + t)
        A = M.to_matrix()
        rng = rng_from(8_000 + t)
        xi = rng.integers(0, 2, size=(trials, 12)).astype(np.float64) * 2 - 1
        sups = np.abs(xi @ A.T).max(axis=1)
        mean = float(sups.mean())
        se = float(sups.std(ddof=1) / math.sqrt(trials))
        ceiling = math.sqrt(12) * math.sqrt(2 * math.log(24))
        if mean > ceiling + 4 * se:
            violations += 1
    _announce(8, violations == 0,
              f"E||M xi||_inf <= sqrt(12)*sqrt(2 ln 24) + 4 SE on 20 sign matrices "
              f"x {trials} trials, {violations} violations")


def test_criterion_09_decoupling_partitions():
    rng = rng_from(31337)
    worst_tries = 0
    for t in range(1000):
        A = rng.standard_normal((8, 8))
        np.fill_diagonal(A, 0.0)
        part = find_decoupling_partition(CoeffTensor.from_matrix(A), seed=t)
        worst_tries = max(worst_tries, part.tries)
        assert part.ratio >= 1 / 8
    _announce(9, worst_tries <= 20,
              f"1000 random 8x8 zero-diagonal matrices partitioned, worst tries {worst_tries} <= 20")


def test_criterion_10_certificate_hygiene():
    checks = {}

    # monotone in r, term by term, for every certificate kind
    fam = {
        "bilinear": [bilinear_bound(identity_matrix(9), r) for r in range(0, 10)],
        "multilinear": [multilinear_bound(block_tensor(4, 2, 3), r) for r in range(0, 5)],
        "quadratic": [
            quadratic_bound(CoeffTensor.from_matrix([[0.0, 1.0], [1.0, 0.0]]), r)
            for r in (0, 1, 2)
        ],
        "block": [block_tensor_bound(8, 2, 2, r) for r in range(0, 9)],
    }
    checks["monotone"] = all(
        b.terms[key] >= a.terms[key] and b.total >= a.total
        for reports in fam.values()
        for a, b in zip(reports, reports[1:])
        for key in a.terms
    )

    # scale-freeness: power-of-two scaling is bitwise, generic is 1e-12
    f = random_sparse(3, 3, 0.7, seed=64)
    checks["scale_free"] = (
        multilinear_bound(f, 2).terms == multilinear_bound(f.scaled(2.0), 2).terms
        and all(
            _rel_gap(a, b) <= 1e-12
            for a, b in zip(
                bilinear_bound(random_sparse(2, 5, 0.7, seed=65), 2).terms.values(),
                bilinear_bound(random_sparse(2, 5, 0.7, seed=65).scaled(-3.0), 2).terms.values(),
            )
        )
    )

    # vanished derivative norms force exactly-zero exponential terms
    rep = multilinear_bound(identity_matrix(6), 2)
    checks["gamma_zero"] = all(
        value == 0.0 for key, value in rep.terms.items() if key.startswith("exp_")
    )

    # quadratic normal form preserves the chaos value, exhaustively to n = 10
    rng = rng_from(123)
    ok = True
    for n in (2, 6, 10):
        A = rng.standard_normal((n, n))
        normalized, _ = quadratic_normalize(CoeffTensor.from_matrix(A), 0.0)
        Ap = normalized.to_matrix()
        trace = float(np.trace(A))
        for bits in range(1 << n):
            xi = np.array([1 - 2 * ((bits >> j) & 1) for j in range(n)], float)
            ok &= abs(float(xi @ A @ xi) - (trace + float(xi @ Ap @ xi))) <= 1e-9
    checks["quadratic_identity"] = ok

    # regime classifier reproduces the block-matrix case split at n = 4096;
    # with natural logs the thresholds are n^(1/3) = 16 and n/log^2 n = 59.2,
    # so w = 64 and w = 1024 both land in the wide case, and w = 32 is added
    # as the middle-case witness
    n = 4096
    log_n = math.log(n)
    case_expected = {
        8: math.sqrt(n / 8),                      # narrow: sqrt(n/w)
        32: math.sqrt(32) * (n / 32) ** 0.25,     # middle: sqrt(w) (n/w)^(1/4)
        64: math.sqrt(n / log_n),                 # wide (64 > n/log^2 n)
        1024: math.sqrt(n / log_n),               # wide
    }
    regime_ok = True
    for w, expected in case_expected.items():
        g = bilinear_regime(block_matrix(n, w))
        regime_ok &= _rel_gap(g.value, expected) <= 1e-12
        regime_ok &= g.regime == ("sparse" if w <= log_n else "dense-b")
    checks["regime_cases"] = regime_ok

    _announce(10, all(checks.values()),
              "; ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
