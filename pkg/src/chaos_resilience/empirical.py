"""Exact and Monte-Carlo ground truth for the certificates, at desk scale.

The certificates bound  sup_x P(res_x <= r)  from above; this module computes
the other side of the comparison:

* exact resilience of a concrete ensemble by breadth-first expansion of
  Hamming balls (or, for diagonal bilinear forms, a meet-in-the-middle
  search over the product signs);
* seeded Monte-Carlo estimates of the resilience distribution with binomial
  standard errors;
* the empirical concentration function (largest window mass) of a sample;
* exact largest atom probability by full enumeration, or its Monte-Carlo
  estimate;
* the exhaustive flip reach  max |f(flipped) - f(original)|  over budgeted
  Hamming balls, the quantity the analytic flip radius must dominate;
* random balanced partitions certifying the 1/8 Frobenius decoupling
  inequality for zero-diagonal matrices;
* statistical checks of the concentration facts the certificates rely on.

Everything is seeded and deterministic; Monte-Carlo margins are quoted as
binomial standard errors and acceptance checks use 4 of them.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import flip_radius_bilinear
from .errors import DimensionMismatchError, GuardExceededError
from .matrixisation import chaos_restriction_vector
from .norms import matrix_profile, tensor_profile
from .tensor import CoeffTensor, SignEnsemble, evaluate_chaos, rng_from, sample_ensemble

__all__ = [
    "ResilienceResult",
    "EmpiricalCdf",
    "AtomProbability",
    "DecouplingPartition",
    "ConcentrationReport",
    "exact_resilience",
    "resilience_distribution",
    "levy_concentration",
    "atom_probability",
    "delta_exhaustive",
    "find_decoupling_partition",
    "verify_concentration",
    "level_tolerance",
    "BFS_COORDINATE_GUARD",
    "EXACT_ATOM_GUARD",
]

BFS_COORDINATE_GUARD = 26
MEET_IN_MIDDLE_GUARD = 30
EXACT_ATOM_GUARD = 2**24
DELTA_EVALUATION_GUARD = 10**7


def level_tolerance(f: CoeffTensor) -> float:
    """Equality tolerance for level-set membership.

    Integer-coefficient tensors use exact equality (sign products keep sums
    exact in double precision at desk scale); real coefficients get a
    declared relative tolerance tied to the Frobenius norm.
    """
    if f.has_integer_coefficients():
        return 0.0
    frob, _ = tensor_profile(f)
    return 1e-9 * frob


@dataclass(frozen=True)
class ResilienceResult:
    """Minimum flip count to reach the target value; inf when unreachable.

    When finite, ``witness`` attains the target at exactly ``value`` flips.
    """

    value: float
    witness: SignEnsemble | None
    method: str

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _slices_by_coordinate(f: CoeffTensor):
    """Nonzero row selections per (slot, position), for incremental deltas."""
    slices = {}
    for p in range(f.degree):
        for j in range(f.dims[p]):
            slices[(p, j)] = np.flatnonzero(f.idx[:, p] == j)
    return slices


def _bfs_resilience(f: CoeffTensor, ensemble: SignEnsemble, x: float, tol: float):
    """Breadth-first search over Hamming balls, smallest radius first.

    Flip subsets of exact size rho are walked depth-first with the chaos
    value maintained incrementally: flipping coordinate (p, j) changes the
    value by -2 * sign * (contraction of the slot-p slice at j against the
    current signs).  The search stops at the first radius containing a
    level-set member, which is the minimum by construction; if the full cube
    is exhausted the target is unreachable.
    """
    coords = [(p, j) for p in range(f.degree) for j in range(f.dims[p])]
    n_coords = len(coords)
    slices = _slices_by_coordinate(f)
    signs = [v.astype(np.float64) for v in ensemble.vectors]
    base = evaluate_chaos(f, ensemble)
    if abs(base - x) <= tol:
        return 0, ensemble

    def contraction(p: int, j: int) -> float:
        sel = slices[(p, j)]
        if sel.shape[0] == 0:
            return 0.0
        prod = f.vals[sel].copy()
        for q in range(f.degree):
            if q != p:
                prod *= signs[q][f.idx[sel, q]]
        return float(prod.sum())

    witness_signs: list | None = None

    def dfs(start: int, depth: int, radius: int, value: float) -> bool:
        nonlocal witness_signs
        for c in range(start, n_coords - (radius - depth) + 1):
            p, j = coords[c]
            delta = -2.0 * signs[p][j] * contraction(p, j)
            signs[p][j] = -signs[p][j]
            new_value = value + delta
            if depth + 1 == radius:
                if abs(new_value - x) <= tol:
                    witness_signs = [s.copy() for s in signs]
                    signs[p][j] = -signs[p][j]
                    return True
            elif dfs(c + 1, depth + 1, radius, new_value):
                signs[p][j] = -signs[p][j]
                return True
            signs[p][j] = -signs[p][j]
        return False

    for radius in range(1, n_coords + 1):
        if dfs(0, 0, radius, base):
            witness = SignEnsemble(
                tuple(np.asarray(s, dtype=np.int8) for s in witness_signs)
            )
            return radius, witness
    return math.inf, None


def _is_diagonal_bilinear(f: CoeffTensor) -> bool:
    return (
        f.degree == 2
        and f.dims[0] == f.dims[1]
        and (f.nnz == 0 or bool(np.all(f.idx[:, 0] == f.idx[:, 1])))
    )


def _masks_by_cost(contrib: np.ndarray):
    """All flip masks over one half, grouped by popcount, with their sums."""
    h = contrib.shape[0]
    masks = np.arange(1 << h, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(h)) & 1).astype(np.float64)
    sums = bits @ contrib
    costs = bits.sum(axis=1).astype(np.int64)
    grouped = []
    for c in range(h + 1):
        sel = np.flatnonzero(costs == c)
        order = np.argsort(sums[sel], kind="stable")
        grouped.append((sums[sel][order], masks[sel][order]))
    return grouped


def _mim_resilience(f: CoeffTensor, ensemble: SignEnsemble, x: float, tol: float):
    """Meet-in-the-middle minimum flips for a diagonal bilinear form.

    For f = sum_j m_j psi_j xi_j only the products z_j = psi_j xi_j matter,
    and toggling one product costs exactly one coordinate flip.  The target
    sum is split over two halves of the diagonal support; each half
    enumerates its 2^(h) toggle masks grouped by flip count, and the halves
    meet through a sorted window search at every cost pair, cheapest first.
    """
    n = f.dims[0]
    diag = np.zeros(n, dtype=np.float64)
    if f.nnz:
        diag[f.idx[:, 0]] = f.vals
    support = np.flatnonzero(diag != 0.0)
    z = (ensemble.vectors[0] * ensemble.vectors[1]).astype(np.float64)
    base_terms = diag[support] * z[support]
    # toggling product j changes the sum by -2 * m_j z_j
    half = support.shape[0] // 2
    idx_a, idx_b = support[:half], support[half:]
    contrib_a = -2.0 * diag[idx_a] * z[idx_a]
    contrib_b = -2.0 * diag[idx_b] * z[idx_b]
    base = float(base_terms.sum())
    grouped_a = _masks_by_cost(contrib_a)
    grouped_b = _masks_by_cost(contrib_b)

    best = math.inf
    best_masks = None
    for cost_a, (sums_a, masks_a) in enumerate(grouped_a):
        if cost_a >= best or sums_a.shape[0] == 0:
            continue
        for cost_b, (sums_b, masks_b) in enumerate(grouped_b):
            if cost_a + cost_b >= best or sums_b.shape[0] == 0:
                continue
            target = x - base - sums_a
            lo = np.searchsorted(sums_b, target - tol, side="left")
            hi = np.searchsorted(sums_b, target + tol, side="right")
            hits = np.flatnonzero(hi > lo)
            if hits.shape[0]:
                a = int(hits[0])
                best = cost_a + cost_b
                best_masks = (int(masks_a[a]), int(masks_b[lo[a]]))
    if best_masks is None:
        return math.inf, None

    vecs = [v.copy() for v in ensemble.vectors]
    for mask, idx_half in zip(best_masks, (idx_a, idx_b)):
        for t, j in enumerate(idx_half):
            if (mask >> t) & 1:
                vecs[1][j] *= -1  # flip the xi side; one flip per toggled product
    return best, SignEnsemble(tuple(vecs))


def exact_resilience(
    f: CoeffTensor, ensemble: SignEnsemble, x: float, method: str = "auto"
) -> ResilienceResult:
    """Exact minimum number of sign flips after which f attains x.

    ``method`` is ``exhaustive-bfs`` (any tensor, at most 26 total
    coordinates), ``meet-in-middle`` (diagonal bilinear forms, up to 30
    coordinates per side pair), or ``auto``.
    """
    if f.dims != ensemble.dims:
        raise DimensionMismatchError(
            f"tensor dims {f.dims} do not match ensemble dims {ensemble.dims}"
        )
    tol = level_tolerance(f)
    total = ensemble.total_coordinates
    if method == "auto":
        if _is_diagonal_bilinear(f) and total > BFS_COORDINATE_GUARD:
            method = "meet-in-middle"
        else:
            method = "exhaustive-bfs"
    if method == "exhaustive-bfs":
        if total > BFS_COORDINATE_GUARD:
            raise GuardExceededError(
                f"exhaustive search refuses {total} > {BFS_COORDINATE_GUARD} coordinates"
            )
        value, witness = _bfs_resilience(f, ensemble, x, tol)
    elif method == "meet-in-middle":
        if not _is_diagonal_bilinear(f):
            raise ValueError("meet-in-middle applies to diagonal bilinear forms only")
        if f.dims[0] > MEET_IN_MIDDLE_GUARD:
            raise GuardExceededError(
                f"meet-in-middle refuses n = {f.dims[0]} > {MEET_IN_MIDDLE_GUARD}"
            )
        value, witness = _mim_resilience(f, ensemble, x, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ResilienceResult(value=float(value), witness=witness, method=method)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Seeded estimate of P(res_x <= r) on an integer grid of radii."""

    grid: tuple[int, ...]
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    trials: int
    seed: int

    def to_csv(self) -> str:
        lines = ["r,estimate,stderr"]
        for r, est, se in zip(self.grid, self.estimates, self.stderrs):
            lines.append(f"{r},{est:.17g},{se:.17g}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "estimates": list(self.estimates),
            "stderrs": list(self.stderrs),
            "trials": self.trials,
            "seed": self.seed,
        }


def resilience_distribution(
    f: CoeffTensor,
    x: float,
    r_max: int,
    trials: int,
    seed: int,
    method: str = "auto",
    threads: int = 1,
) -> EmpiricalCdf:
    """Monte-Carlo CDF of the resilience at a fixed target value.

    Trials draw independent ensembles from per-trial derived seeds, so the
    result is independent of execution order and worker count.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if r_max < 0:
        raise ValueError("r_max must be nonnegative")

    def one(trial: int) -> float:
        ensemble = sample_ensemble(f.dims, seed, trial)
        return exact_resilience(f, ensemble, x, method=method).value

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(trials)))
    else:
        values = [one(t) for t in range(trials)]
    arr = np.asarray(values, dtype=np.float64)
    grid = tuple(range(r_max + 1))
    estimates, stderrs = [], []
    for r in grid:
        p = float(np.mean(arr <= r))
        estimates.append(p)
        stderrs.append(math.sqrt(p * (1.0 - p) / trials))
    return EmpiricalCdf(
        grid=grid, estimates=tuple(estimates), stderrs=tuple(stderrs),
        trials=trials, seed=seed,
    )


def levy_concentration(samples, eps: float, weights=None) -> float:
    """Largest probability mass of the empirical measure in a window of
    radius eps; exact, by sorting plus a sliding window anchored at sample
    points."""
    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("empty sample")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if weights is None:
        w = np.ones(values.shape)
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != values.shape or np.any(w < 0) or w.sum() == 0:
            raise ValueError("weights must be nonnegative, aligned, and not all zero")
    order = np.argsort(values, kind="stable")
    v, w = values[order], w[order]
    cw = np.concatenate(([0.0], np.cumsum(w)))
    ends = np.searchsorted(v, v + 2.0 * eps, side="right")
    masses = cw[ends] - cw[np.arange(v.size)]
    # normalize by the accumulated total so a covering window is exactly 1
    return float(masses.max() / cw[-1])


class AtomProbability(NamedTuple):
    value: float
    stderr: float
    mode: str


def _modal_mass(sorted_values: np.ndarray, tol: float) -> int:
    """Largest run length when consecutive gaps within tol merge values."""
    if sorted_values.size == 1:
        return 1
    breaks = np.flatnonzero(np.diff(sorted_values) > tol)
    edges = np.concatenate(([0], breaks + 1, [sorted_values.size]))
    return int(np.diff(edges).max())


def _all_values(f: CoeffTensor) -> np.ndarray:
    """Chaos values over the full sign cube, one per packed coordinate mask.

    Axis p of the result enumerates the 2^(n_p) sign patterns of slot p; bit
    j of the pattern flips coordinate j from +1 to -1.
    """
    tensor = f.to_dense()
    for p in range(f.degree):
        n_p = f.dims[p]
        patterns = np.arange(1 << n_p, dtype=np.int64)
        signs = 1.0 - 2.0 * ((patterns[:, None] >> np.arange(n_p)) & 1)
        tensor = np.tensordot(tensor, signs.T, axes=([0], [0]))
    return tensor.ravel()


def atom_probability(
    f: CoeffTensor, mode: str = "exact", budget: int | None = None, seed: int = 0
) -> AtomProbability:
    """Largest point mass of the chaos distribution.

    Exact mode enumerates all sign assignments (guarded at 2^24 states);
    Monte-Carlo mode returns the modal-bin frequency of ``budget`` seeded
    samples with its binomial standard error.
    """
    tol = level_tolerance(f)
    if mode == "exact":
        states = 1 << sum(f.dims)
        if states > EXACT_ATOM_GUARD:
            raise GuardExceededError(
                f"exact atom enumeration refuses 2^{sum(f.dims)} > 2^24 states"
            )
        values = np.sort(_all_values(f))
        return AtomProbability(_modal_mass(values, tol) / values.size, 0.0, "exact")
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if budget is None or budget <= 0:
        raise ValueError("montecarlo mode needs a positive trial budget")
    rng = rng_from(seed)
    prod = np.ones((budget, max(f.nnz, 1)), dtype=np.float64)
    for p in range(f.degree):
        signs = rng.integers(0, 2, size=(budget, f.dims[p])).astype(np.float64) * 2 - 1
        if f.nnz:
            prod *= signs[:, f.idx[:, p]]
    values = np.sort(prod @ f.vals if f.nnz else np.zeros(budget))
    p_hat = _modal_mass(values, tol) / budget
    return AtomProbability(p_hat, math.sqrt(p_hat * (1.0 - p_hat) / budget), "montecarlo")


def _ball_sign_matrix(vector: np.ndarray, budget: int) -> np.ndarray:
    """All sign vectors within Hamming distance budget, original first."""
    n = vector.shape[0]
    rows = [vector.astype(np.float64)]
    for size in range(1, budget + 1):
        for subset in itertools.combinations(range(n), size):
            v = vector.astype(np.float64).copy()
            v[list(subset)] *= -1
            rows.append(v)
    return np.stack(rows, axis=0)


def delta_exhaustive(f: CoeffTensor, ensemble: SignEnsemble, budgets) -> float:
    """Exact max |f(flipped) - f(original)| over per-slot flip budgets.

    Enumerates the product of per-slot Hamming balls; guarded at 1e7 chaos
    evaluations.  This is the quantity the analytic flip radius dominates.
    """
    if f.dims != ensemble.dims:
        raise DimensionMismatchError(
            f"tensor dims {f.dims} do not match ensemble dims {ensemble.dims}"
        )
    budgets = tuple(int(b) for b in budgets)
    if len(budgets) != f.degree or any(b < 0 for b in budgets):
        raise ValueError("one nonnegative flip budget per slot is required")
    count = 1
    for n_p, b in zip(f.dims, budgets):
        count *= sum(math.comb(n_p, t) for t in range(min(b, n_p) + 1))
    if count > DELTA_EVALUATION_GUARD:
        raise GuardExceededError(f"{count} evaluations exceed the 1e7 budget")
    tensor = f.to_dense()
    for p in range(f.degree):
        candidates = _ball_sign_matrix(ensemble.vectors[p], min(budgets[p], f.dims[p]))
        tensor = np.tensordot(tensor, candidates.T, axes=([0], [0]))
    base = tensor.flat[0]  # the all-original corner
    return float(np.abs(tensor - base).max())


class DecouplingPartition(NamedTuple):
    I1: tuple[int, ...]
    I2: tuple[int, ...]
    tries: int
    ratio: float


def find_decoupling_partition(
    M: CoeffTensor, seed: int, max_tries: int = 1000
) -> DecouplingPartition:
    """Random balanced partition with cross-block Frobenius mass >= 1/8.

    Each try splits the index set by independent fair coin flips; the
    expected cross mass is exactly one eighth of the total, so success within
    a few tries is overwhelmingly likely for any genuine instance.  The
    returned partition is re-asserted against the inequality (1-based
    indices).
    """
    if M.degree != 2 or M.dims[0] != M.dims[1]:
        raise ValueError("expects a square degree-2 tensor")
    n = M.dims[0]
    if n < 2:
        raise ValueError("needs at least two indices to partition")
    if M.nnz == 0:
        raise ValueError("the zero matrix admits no decoupling partition")
    if np.any(M.idx[:, 0] == M.idx[:, 1]):
        raise ValueError("expects a zero-diagonal matrix; normalize the quadratic first")
    sq = M.vals * M.vals
    total = float(sq.sum())
    rows, cols = M.idx[:, 0], M.idx[:, 1]
    rng = rng_from(seed)
    best = -1.0
    for t in range(1, max_tries + 1):
        side = rng.integers(0, 2, size=n)
        cross = float(sq[(side[rows] == 1) & (side[cols] == 0)].sum())
        ratio = cross / total
        best = max(best, ratio)
        if cross >= total / 8.0:
            I1 = tuple(int(i) + 1 for i in np.flatnonzero(side == 1))
            I2 = tuple(int(i) + 1 for i in np.flatnonzero(side == 0))
            assert cross >= total / 8.0
            return DecouplingPartition(I1=I1, I2=I2, tries=t, ratio=ratio)
    raise RuntimeError(
        f"no partition with cross mass >= 1/8 in {max_tries} tries "
        f"(best ratio {best:.6f}); this indicates a bug or an adversarial tiny n"
    )


@dataclass(frozen=True)
class ConcentrationReport:
    """Measured margins for the concentration facts behind the certificates.

    ``freq_below_half`` estimates how often the restriction vector loses half
    its typical length; the Dudley fields compare the Monte-Carlo mean of
    ||M xi||_inf with the sub-gaussian maximal-inequality ceiling (the
    absolute value doubles the index set, hence log(2n)); the concentration
    fields report the window mass of the chaos at the mean flip radius
    against the small-ball shape  mean_radius/F + exp(-stable_rank), as a
    ratio, with no constant asserted.
    """

    slot: int
    trials: int
    seed: int
    freq_below_half: float
    freq_stderr: float
    dudley_mean: float | None = None
    dudley_stderr: float | None = None
    dudley_ceiling: float | None = None
    levy_radius: float | None = None
    levy_value: float | None = None
    bound_shape: float | None = None
    ratio: float | None = None

    def to_json_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def verify_concentration(
    f: CoeffTensor, i: int, trials: int, seed: int, r: int = 1
) -> ConcentrationReport:
    """Monte-Carlo margins for restriction-vector concentration and, for
    degree-2 inputs, the Dudley ceiling and the small-ball shape."""
    if trials < 1000:
        raise ValueError("at least 1000 trials are required")
    frob, _ = tensor_profile(f)
    below = 0
    for t in range(trials):
        ensemble = sample_ensemble(f.dims, seed, t)
        v = chaos_restriction_vector(f, i, ensemble)
        if float(np.linalg.norm(v)) <= frob / 2.0:
            below += 1
    freq = below / trials
    report = {
        "slot": i,
        "trials": trials,
        "seed": seed,
        "freq_below_half": freq,
        "freq_stderr": math.sqrt(freq * (1.0 - freq) / trials),
    }
    if f.degree == 2:
        profile = matrix_profile(f)
        A = f.to_matrix()
        n_rows, n_cols = A.shape
        rng = rng_from(seed, 1)
        xi = rng.integers(0, 2, size=(trials, n_cols)).astype(np.float64) * 2 - 1
        mxi = xi @ A.T
        sups = np.abs(mxi).max(axis=1)
        dudley_mean = float(sups.mean())
        dudley_stderr = float(sups.std(ddof=1) / math.sqrt(trials))
        ceiling = profile.row_sup_l2 * math.sqrt(2.0 * math.log(2 * n_rows))

        psi = rng.integers(0, 2, size=(trials, n_rows)).astype(np.float64) * 2 - 1
        chaos_values = np.einsum("ti,ti->t", psi, mxi)
        radii = np.array(
            [flip_radius_bilinear(f, xi[t], r) for t in range(trials)]
        )
        mean_radius = float(radii.mean())
        levy_value = levy_concentration(chaos_values, mean_radius)
        bound_shape = mean_radius / frob + math.exp(-profile.stable_rank)
        report.update(
            dudley_mean=dudley_mean,
            dudley_stderr=dudley_stderr,
            dudley_ceiling=ceiling,
            levy_radius=mean_radius,
            levy_value=levy_value,
            bound_shape=bound_shape,
            ratio=levy_value / bound_shape if bound_shape > 0 else math.inf,
        )
    return ConcentrationReport(**report)
