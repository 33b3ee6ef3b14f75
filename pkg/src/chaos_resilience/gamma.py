"""Combinatorial norms of expected derivatives of the squared restriction vector.

For a square degree-d tensor and a slot i, the squared Euclidean norm of the
restriction vector is a sign polynomial in the remaining (d-1)*n coordinates:

    || v_i ||_2^2  =  vec(rest)^T (A_i^T A_i) vec(rest).

Because signs square to one, the monomial attached to a pair of fibre indices
(j, k) survives only on the coordinates where j and k disagree.  The expected
k-th derivative tensor of this polynomial therefore has one distinct value per
"difference key": an unordered choice of k/2 positions where the fibres
differ, together with the unordered pair of differing directions at each
position.  ``gamma_norm`` accumulates Gram products per difference key and
scores

    gamma(i, k)^2  =  multiplicity * sum over keys of (accumulated sum)^2,
    multiplicity   =  (k/2)! * 2^(k/2),

the multiplicity being the number of ordered index tuples of the canonical
paired form that realize one unordered key.  ``gamma_oracle`` recomputes the
same quantity from scratch -- explicit symbolic differentiation of the
square-eliminated polynomial, entry expectations taken exhaustively over all
2^((d-1)n) sign assignments -- and is the validation target for the
combinatorial route.

Odd derivative orders have zero expectation and are excluded by contract.
A zero value for every (i, k) means || v_i ||_2 is deterministic, in which
case the certificate's exponential failure term is exactly zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardExceededError
from .matrixisation import matrixise
from .tensor import CoeffTensor

__all__ = [
    "GammaProfile",
    "gamma_norm",
    "gamma_oracle",
    "gamma_profile",
    "ORACLE_COORDINATE_GUARD",
    "DEFAULT_PAIR_VISIT_GUARD",
]

ORACLE_COORDINATE_GUARD = 20
DEFAULT_PAIR_VISIT_GUARD = 10**8


@dataclass(frozen=True)
class GammaProfile:
    """Per-(slot, even order) derivative norms, their maximum, and the
    concentration ratios frobenius^2 / value (infinity when the value is 0)."""

    values: dict[tuple[int, int], float]
    aggregate: float
    ratios: dict[tuple[int, int], float]
    frobenius_squared: float

    def min_ratio(self, slot: int) -> float:
        """Smallest concentration ratio over even orders at one slot."""
        candidates = [v for (i, _), v in self.ratios.items() if i == slot]
        return min(candidates) if candidates else math.inf

    def to_json_dict(self) -> dict:
        return {
            "values": {f"{i},{k}": v for (i, k), v in sorted(self.values.items())},
            "aggregate": self.aggregate,
            "ratios": {
                f"{i},{k}": (v if math.isfinite(v) else "inf")
                for (i, k), v in sorted(self.ratios.items())
            },
        }


def _check_square(f: CoeffTensor) -> int:
    if f.degree < 2:
        raise ValueError("derivative norms need a tensor of degree at least 2")
    if not f.is_square():
        raise ValueError("derivative norms are defined for square tensors only")
    return f.dims[0]


def _check_order(f: CoeffTensor, k: int) -> int:
    if k % 2 != 0 or not 2 <= k <= 2 * (f.degree - 1):
        raise ValueError(
            f"derivative order must be even and in [2, {2 * (f.degree - 1)}], got {k}"
        )
    return k // 2


def _difference_key_accumulators(
    f: CoeffTensor, i: int, max_pair_visits: int
) -> dict[int, dict[tuple, float]]:
    """Accumulate Gram products of slot-i fibre pairs into difference keys.

    Returns, for each half-order s, a map from canonical key (sorted tuple of
    (position, low direction, high direction)) to the sum of (A^T A)_{jk}
    over both ordered fibre pairs realizing the key.  Only column pairs that
    share a row of A_i are visited, i.e. only nonzero Gram entries.
    """
    mat = matrixise(f, i)
    acc: dict[int, dict[tuple, float]] = {}
    visits = 0
    for _, other_rows, values in mat.row_groups():
        m = values.shape[0]
        visits += m * (m - 1) // 2
        if visits > max_pair_visits:
            raise GuardExceededError(
                f"column-pair visits exceeded the guard ({max_pair_visits}); "
                "raise max_pair_visits to proceed"
            )
        for a in range(m):
            ja = other_rows[a]
            va = values[a]
            for b in range(a + 1, m):
                jb = other_rows[b]
                diff = np.flatnonzero(ja != jb)
                s = diff.shape[0]
                key = tuple(
                    (int(p), int(min(ja[p], jb[p])), int(max(ja[p], jb[p])))
                    for p in diff
                )
                # both ordered pairs (j,k) and (k,j) carry the same key
                acc.setdefault(s, {}).setdefault(key, 0.0)
                acc[s][key] += 2.0 * va * values[b]
    return acc


def _score(acc_for_s: dict[tuple, float], s: int) -> float:
    multiplicity = math.factorial(s) * 2**s
    total = 0.0
    for key in sorted(acc_for_s):  # canonical order: deterministic summation
        total += multiplicity * acc_for_s[key] ** 2
    return math.sqrt(total)


def gamma_norm(
    f: CoeffTensor, i: int, k: int, max_pair_visits: int = DEFAULT_PAIR_VISIT_GUARD
) -> float:
    """Derivative norm at slot i and even order k via difference-key counting."""
    _check_square(f)
    s = _check_order(f, k)
    if not 1 <= i <= f.degree:
        raise ValueError(f"slot {i} out of range for degree {f.degree}")
    acc = _difference_key_accumulators(f, i, max_pair_visits)
    return _score(acc.get(s, {}), s)


def gamma_profile(
    f: CoeffTensor, max_pair_visits: int = DEFAULT_PAIR_VISIT_GUARD
) -> GammaProfile:
    """Derivative norms for every slot and even order, plus concentration ratios."""
    _check_square(f)
    # squared Frobenius norm taken directly from the coefficients, not via
    # sqrt-then-square, so ratios match closed-form evaluations exactly
    frob_sq = float((f.vals * f.vals).sum())
    values: dict[tuple[int, int], float] = {}
    ratios: dict[tuple[int, int], float] = {}
    for i in range(1, f.degree + 1):
        acc = _difference_key_accumulators(f, i, max_pair_visits)
        for k in range(2, 2 * (f.degree - 1) + 1, 2):
            v = _score(acc.get(k // 2, {}), k // 2)
            values[(i, k)] = v
            ratios[(i, k)] = frob_sq / v if v > 0.0 else math.inf
    aggregate = max(values.values()) if values else 0.0
    return GammaProfile(values=values, aggregate=aggregate, ratios=ratios, frobenius_squared=frob_sq)


# -- exhaustive derivative oracle -------------------------------------------


def _popcount(arr: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr)
    out = np.zeros_like(arr)
    work = arr.copy()
    while work.any():
        out += work & 1
        work >>= 1
    return out


class _ExhaustiveExpectation:
    """Expectation of products of sign coordinates, by full enumeration.

    For a variable subset R the expectation of prod_{v in R} s_v is computed
    as the average over all 2^N assignments of the parity product -- no
    vanishing-moment shortcut, which is the point of the oracle.
    """

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.masks = np.arange(1 << n_vars, dtype=np.uint64)
        self.cache: dict[frozenset, float] = {}

    def of(self, variables: frozenset) -> float:
        hit = self.cache.get(variables)
        if hit is not None:
            return hit
        mask = np.uint64(0)
        for v in variables:
            mask |= np.uint64(1) << np.uint64(v)
        parity = _popcount(self.masks & mask) & np.uint64(1)
        value = float(np.mean(1.0 - 2.0 * parity.astype(np.float64)))
        self.cache[variables] = value
        return value


def _square_eliminated_polynomial(f: CoeffTensor, i: int) -> dict[frozenset, float]:
    """Monomials of vec(rest)^T (A_i^T A_i) vec(rest) after sign-squaring.

    Variables are (remaining position, direction) pairs encoded as integers
    position * n + direction.  For each ordered pair of fibres sharing a row
    of A_i, the product monomial keeps exactly the variables of odd combined
    degree.
    """
    n = f.dims[0]
    mat = matrixise(f, i)
    monomials: dict[frozenset, float] = {}
    for _, other_rows, values in mat.row_groups():
        m = values.shape[0]
        for a in range(m):
            ja = other_rows[a]
            for b in range(m):
                jb = other_rows[b]
                degree_count: dict[int, int] = {}
                for p in range(ja.shape[0]):
                    degree_count[int(p * n + ja[p])] = degree_count.get(int(p * n + ja[p]), 0) + 1
                    degree_count[int(p * n + jb[p])] = degree_count.get(int(p * n + jb[p]), 0) + 1
                odd = frozenset(v for v, c in degree_count.items() if c % 2 == 1)
                monomials[odd] = monomials.get(odd, 0.0) + float(values[a] * values[b])
    return monomials


def _paired_index_tuples(n: int, n_positions: int, s: int):
    """Ordered tuples of the canonical paired form with distinct positions.

    Yields the flat variable tuple ((p_1,c_1)..(p_s,c_s),(p_1,c'_1)..) as a
    list of encoded variable ids; every c differs from its partner c'.
    """
    for positions in itertools.permutations(range(n_positions), s):
        for firsts in itertools.product(range(n), repeat=s):
            for seconds in itertools.product(range(n), repeat=s):
                if any(c == cc for c, cc in zip(firsts, seconds)):
                    continue
                yield [p * n + c for p, c in zip(positions, firsts)] + [
                    p * n + c for p, c in zip(positions, seconds)
                ]


def gamma_oracle(f: CoeffTensor, i: int, k: int) -> float:
    """Exhaustive recomputation of the derivative norm; validation target.

    Builds the square-eliminated polynomial explicitly, differentiates each
    monomial symbolically with respect to every ordered index tuple of the
    canonical paired form, evaluates the leftover expectations by complete
    enumeration of sign assignments, and takes the root-sum-of-squares over
    tuples.  Feasible only under the coordinate guard (d-1)*n <= 20.
    """
    n = _check_square(f)
    s = _check_order(f, k)
    if not 1 <= i <= f.degree:
        raise ValueError(f"slot {i} out of range for degree {f.degree}")
    n_positions = f.degree - 1
    n_vars = n_positions * n
    if n_vars > ORACLE_COORDINATE_GUARD:
        raise GuardExceededError(
            f"exhaustive oracle refuses (d-1)*n = {n_vars} > {ORACLE_COORDINATE_GUARD}"
        )
    monomials = _square_eliminated_polynomial(f, i)
    expectation = _ExhaustiveExpectation(n_vars)

    # Index monomials by their k-variable subsets so each tuple evaluation is
    # a single lookup: derivative of x_S w.r.t. tuple T is x_{S \ T} when the
    # tuple's variables all occur in S, zero otherwise.
    by_subset: dict[frozenset, list[tuple[frozenset, float]]] = {}
    for S, coeff in monomials.items():
        if len(S) < k:
            continue
        for combo in itertools.combinations(sorted(S), k):
            key = frozenset(combo)
            by_subset.setdefault(key, []).append((S - key, coeff))

    total = 0.0
    for tuple_vars in _paired_index_tuples(n, n_positions, s):
        key = frozenset(tuple_vars)
        entry = 0.0
        for leftover, coeff in by_subset.get(key, ()):
            entry += coeff * expectation.of(leftover)
        total += entry * entry
    return math.sqrt(total)
