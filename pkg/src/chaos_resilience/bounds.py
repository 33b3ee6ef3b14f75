"""Probability certificates bounding sup_x P(res_x <= r) for sign chaos.

Four certificates are assembled here, each an itemized upper bound on the
probability that r adversarial sign flips suffice to steer the chaos onto any
fixed value:

* bilinear  -- c1*r*f_val + c2*r*g_val + exp(-c3*stable_rank), for a
  decoupled form  psi^T M xi;
* multilinear -- for each nonempty dimension subset I, a small-ball term
  c_sum * (2r)^|I| * (|I| log n)^(d/2) * maxF(I)/F  plus an exponential
  concentration-failure term driven by the derivative norms; applies to
  square decoupled chaos of any degree d >= 2;
* quadratic -- fourth root of the bilinear-style composite plus c4/n, for a
  coupled form  xi^T M xi, after symmetrizing and removing the diagonal;
* block closed form -- the multilinear certificate of the block-diagonal
  tensor with block width w, evaluated without materializing the tensor.

Every unspecified leading constant defaults to 1 and is echoed in the
report; the artifact's job is exact bookkeeping of the instance-dependent
terms, not constant-chasing.  All certificate terms are ratios of norms and
are therefore invariant under scaling of the coefficient tensor.

Flip radii (the deterministic reach of r flips) and the Young modulus used
to convert moment control into the log^(d/2) factor also live here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChaosError, DimensionMismatchError
from .gamma import GammaProfile, gamma_profile
from .matrixisation import matrixise, max_restriction_frobenius, restriction_sup_norm
from .norms import NormProfile, ingredients_from_profile, matrix_profile, tensor_profile
from .tensor import CoeffTensor, SignEnsemble

__all__ = [
    "ConstantSet",
    "BoundReport",
    "RegimeGuarantee",
    "young_modulus",
    "young_modulus_inverse",
    "flip_radius_bilinear",
    "flip_radius_multilinear",
    "bilinear_bound",
    "bilinear_regime",
    "multilinear_bound",
    "quadratic_normalize",
    "quadratic_bound",
    "block_tensor_bound",
]


@dataclass(frozen=True)
class ConstantSet:
    """Leading constants of the certificates; all default to 1.

    ``theta`` is the exponent denominator of the exponential terms; ``None``
    means "use the degree d", the documented default scaling.
    """

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    c_sum: float = 1.0
    c_exp: float = 1.0
    theta: float | None = None

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4", "c_sum", "c_exp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be strictly positive")
        if self.theta is not None and self.theta <= 0:
            raise ValueError("theta must be strictly positive")

    def theta_for(self, degree: int) -> float:
        return float(degree) if self.theta is None else float(self.theta)

    def as_dict(self, degree: int | None = None) -> dict:
        out = {
            "c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4,
            "c_sum": self.c_sum, "c_exp": self.c_exp,
            "theta": self.theta,
        }
        if degree is not None:
            out["theta_resolved"] = self.theta_for(degree)
        return out


DEFAULT_CONSTANTS = ConstantSet()


@dataclass(frozen=True)
class BoundReport:
    """Itemized certificate: named nonnegative terms, clamped total, echoes.

    ``total`` is min(1, sum of terms); the pre-clamp value is retained.  A
    report is a pure function of (input descriptor, r, constants).
    """

    kind: str
    descriptor: dict
    r: int
    terms: dict[str, float]
    total: float
    total_unclamped: float
    constants: dict
    regime: str | None = None
    warnings: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.terms.values()):
            raise ValueError("certificate terms must be nonnegative")
        s = sum(self.terms.values())
        if not math.isclose(s, self.total_unclamped, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("total_unclamped must equal the sum of terms")
        if self.total != min(1.0, self.total_unclamped):
            raise ValueError("total must be the clamped sum of terms")

    def to_json_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "descriptor": self.descriptor,
            "r": self.r,
            "terms": dict(self.terms),
            "total": self.total,
            "total_unclamped": self.total_unclamped,
            "constants": self.constants,
            "warnings": list(self.warnings),
        }
        if self.regime is not None:
            out["regime"] = self.regime
        if self.extras:
            out["extras"] = self.extras
        return out


def _make_report(kind, descriptor, r, terms, constants_dict, **kw) -> BoundReport:
    total_unclamped = float(sum(terms.values()))
    return BoundReport(
        kind=kind,
        descriptor=descriptor,
        r=r,
        terms=terms,
        total=min(1.0, total_unclamped),
        total_unclamped=total_unclamped,
        constants=constants_dict,
        **kw,
    )


# -- Young modulus -----------------------------------------------------------


def young_modulus(d: int, x: float) -> float:
    """Convex gauge with exponent 2/d: linear below the knee x0, then
    exp(x^(2/d)) minus a matching constant.  For d = 2 the knee degenerates
    to 0 and the function is exp(x) - 1."""
    if d < 2:
        raise ValueError("the modulus is defined for degree >= 2")
    if x < 0:
        raise ValueError("negative input to the Young modulus")
    alpha = 2.0 / d
    if d == 2:
        return math.expm1(x)
    x0 = ((1.0 - alpha) / alpha) ** (1.0 / alpha)
    knee_exp = math.exp(x0**alpha)
    if x < x0:
        return (1.0 - alpha) * knee_exp * (x / x0)
    return math.exp(x**alpha) - alpha * knee_exp


def young_modulus_inverse(d: int, y: float) -> float:
    """Closed-form inverse of :func:`young_modulus`, branch by branch."""
    if d < 2:
        raise ValueError("the modulus is defined for degree >= 2")
    if y < 0:
        raise ValueError("negative input to the inverse modulus")
    alpha = 2.0 / d
    if d == 2:
        return math.log1p(y)
    x0 = ((1.0 - alpha) / alpha) ** (1.0 / alpha)
    knee_exp = math.exp(x0**alpha)
    knee_value = (1.0 - alpha) * knee_exp
    if y < knee_value:
        return y * x0 / knee_value
    return math.log(y + alpha * knee_exp) ** (1.0 / alpha)


# -- flip radii --------------------------------------------------------------


def flip_radius_bilinear(M: CoeffTensor, xi: np.ndarray, r: int) -> float:
    """Deterministic reach of r flips on a bilinear form, given the column-side
    signs:  2r * ||M xi||_inf + 2r * ||M||_inf * min(r, max row support).

    The transposed companion is obtained by calling with the transpose and
    the row-side signs.  r = 0 is admitted and gives 0.
    """
    if M.degree != 2:
        raise ValueError("flip_radius_bilinear expects a degree-2 tensor")
    if r < 0:
        raise ValueError("r must be nonnegative")
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape[0] != M.dims[1]:
        raise DimensionMismatchError(f"sign vector length {xi.shape[0]} vs dims {M.dims}")
    if M.nnz == 0:
        return 0.0
    rows, cols, vals = M.idx[:, 0], M.idx[:, 1], M.vals
    mxi = np.bincount(rows, weights=vals * xi[cols], minlength=M.dims[0])
    max_abs = float(np.abs(vals).max())
    row_l0 = int(np.bincount(rows).max())
    return 2.0 * r * float(np.abs(mxi).max()) + 2.0 * r * max_abs * min(r, row_l0)


def flip_radius_multilinear(f: CoeffTensor, ensemble: SignEnsemble, r: int) -> float:
    """Sum over nonempty dimension subsets I of (2r)^|I| times the largest
    restricted chaos magnitude along I; dominates any change reachable with
    r total flips."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    total = 0.0
    for I in _nonempty_subsets(f.degree):
        total += (2.0 * r) ** len(I) * restriction_sup_norm(f, I, ensemble)
    return total


def _nonempty_subsets(d: int):
    for size in range(1, d + 1):
        yield from itertools.combinations(range(1, d + 1), size)


# -- bilinear certificate ----------------------------------------------------


def _check_r(r: int, n: int) -> int:
    r = int(r)
    if not 0 <= r <= n:
        raise ValueError(f"r must lie in [0, {n}], got {r}")
    return r


def bilinear_bound(
    M: CoeffTensor, r: int, consts: ConstantSet = DEFAULT_CONSTANTS
) -> BoundReport:
    """Certificate for a decoupled bilinear form with independent sign vectors."""
    profile = matrix_profile(M)
    if profile.stable_rank is None:
        raise ValueError("the zero matrix admits no certificate")
    n = max(M.dims)
    r = _check_r(r, n)
    f_val, g_val = ingredients_from_profile(profile, n, max(r, 1))
    if r == 0:
        g_val = 0.0
    terms = {
        "f_term": consts.c1 * r * f_val,
        "g_term": consts.c2 * r * g_val,
        "exp_term": math.exp(-consts.c3 * profile.stable_rank),
    }
    return _make_report(
        kind="bilinear",
        descriptor={"dims": list(M.dims), "nnz": M.nnz},
        r=r,
        terms=terms,
        constants_dict=consts.as_dict(),
        regime=_regime_from_profile(profile, n).regime,
        extras={"profile": profile.as_dict(), "f_val": f_val, "g_val": g_val},
    )


@dataclass(frozen=True)
class RegimeGuarantee:
    """Regime label plus the matching asymptotic resilience expression.

    ``formula`` is one of ``F/L0``, ``min(F/sqrt(L0*log n), sqrt(F))``;
    ``components`` carries the branch values and the derivation-level
    expression recorded alongside the displayed one.
    """

    regime: str
    formula: str
    value: float
    components: dict
    warnings: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "regime": self.regime,
            "formula": self.formula,
            "value": self.value,
            "components": self.components,
            "warnings": list(self.warnings),
        }


def bilinear_regime(M: CoeffTensor) -> RegimeGuarantee:
    """Sparse/dense classification with the instance-evaluated guarantee.

    Normalization premises (max |entry| = 1, row support and row diameter
    dominating their column counterparts, stable rank not small) are checked
    and reported as warnings, never errors.  The classifier itself uses the
    row support count L0, the Frobenius norm F, and natural log of the larger
    dimension:

        sparse   (L0 <= log n)            ->  F / L0
        dense-a  (F > L0^2)               ->  F / L0
        dense-b  (otherwise)              ->  min(F / sqrt(L0 log n), sqrt(F))
    """
    profile = matrix_profile(M)
    if profile.stable_rank is None:
        raise ValueError("the zero matrix admits no regime classification")
    return _regime_from_profile(profile, max(M.dims))


def _regime_from_profile(profile: NormProfile, n: int) -> RegimeGuarantee:
    log_n = math.log(n)
    warnings = []
    if profile.max_abs != 1.0:
        warnings.append("max_abs_not_one")
    if profile.row_sup_l0 < profile.col_sup_l0:
        warnings.append("column_support_dominates")
    if profile.row_sup_l2 < profile.col_sup_l2:
        warnings.append("column_diameter_dominates")
    if profile.stable_rank < log_n:
        warnings.append("stable_rank_small")

    F = profile.frobenius
    L0 = profile.row_sup_l0
    components: dict = {"frobenius": F, "row_sup_l0": L0, "log_n": log_n}
    if L0 <= log_n:
        regime, formula, value = "sparse", "F/L0", F / L0
    elif F > L0 * L0:
        regime, formula, value = "dense-a", "F/L0", F / L0
    else:
        v_log = F / math.sqrt(L0 * log_n)
        v_root = math.sqrt(F)
        regime, formula = "dense-b", "min(F/sqrt(L0*log n), sqrt(F))"
        value = min(v_log, v_root)
        components["F/sqrt(L0*log n)"] = v_log
        components["sqrt(F)"] = v_root
        # derivation-level form: the dense-regime min against max(F/L0, sqrt(F))
        components["appendix_form"] = min(v_log, max(F / L0, v_root))
    return RegimeGuarantee(
        regime=regime, formula=formula, value=value,
        components=components, warnings=tuple(warnings),
    )


# -- multilinear certificate -------------------------------------------------


def _subset_label(I) -> str:
    return "-".join(str(j) for j in I)


def _sum_term(consts: ConstantSet, r: int, size: int, log_n: float, d: int,
              max_frob: float, frobenius: float) -> float:
    return consts.c_sum * (2.0 * r) ** size * (size * log_n) ** (d / 2.0) * (max_frob / frobenius)


def _phi_term(consts: ConstantSet, r: int, size: int, n: int, d: int,
              max_frob: float, frobenius: float) -> float:
    return consts.c_sum * (2.0 * r) ** size * young_modulus_inverse(d, float(n) ** size) \
        * (max_frob / frobenius)


def _exp_term(consts: ConstantSet, min_ratios_per_slot: dict[int, float], I,
              theta: float) -> float:
    best = math.inf
    for i in I:
        rho = min_ratios_per_slot[i]
        candidate = 0.0 if math.isinf(rho) else math.exp(-(rho ** (1.0 / theta)))
        best = min(best, candidate)
    return consts.c_exp * best


def _assemble_multilinear_terms(
    *, d: int, n: int, r: int, consts: ConstantSet, frobenius: float,
    max_frobs: dict[tuple, float], min_ratios_per_slot: dict[int, float],
):
    """Shared term assembly for the generic and closed-form block certificates.

    Both callers feed the same floating-point quantities through the same
    expressions, which is what makes the closed form reproduce the
    materialized run exactly.
    """
    log_n = math.log(n)
    theta = consts.theta_for(d)
    terms: dict[str, float] = {}
    phi_form: dict[str, float] = {}
    restriction_sum = 0.0
    for I in _nonempty_subsets(d):
        size = len(I)
        label = _subset_label(I)
        max_frob = max_frobs[I]
        terms[f"sum_{label}"] = _sum_term(consts, r, size, log_n, d, max_frob, frobenius)
        phi_form[f"sum_{label}"] = _phi_term(consts, r, size, n, d, max_frob, frobenius)
        restriction_sum += (2.0 * r) ** size * (max_frob / frobenius)
    for I in _nonempty_subsets(d):
        terms[f"exp_{_subset_label(I)}"] = _exp_term(consts, min_ratios_per_slot, I, theta)
    return terms, phi_form, restriction_sum


def multilinear_bound(
    f: CoeffTensor,
    r: int,
    consts: ConstantSet = DEFAULT_CONSTANTS,
    include_spectral_diagnostic: bool = False,
) -> BoundReport:
    """Certificate for square decoupled chaos of degree d >= 2.

    Per nonempty dimension subset I the report carries a small-ball term
    (log-power form) and an exponential concentration-failure term; the
    modulus-inverse form of the small-ball terms is reported alongside.  The
    large-n premise is reported as a warning when violated, never enforced --
    desk-scale instances violate it by design.
    """
    if f.degree < 2:
        raise ValueError("the multilinear certificate needs degree >= 2")
    if not f.is_square():
        raise ValueError("the multilinear certificate needs a square tensor")
    frobenius, _ = tensor_profile(f)
    if frobenius == 0.0:
        raise ValueError("the zero tensor admits no certificate")
    d, n = f.degree, f.dims[0]
    r = _check_r(r, n)
    gp = gamma_profile(f)
    max_frobs = {I: max_restriction_frobenius(f, I) for I in _nonempty_subsets(d)}
    min_ratios = {i: gp.min_ratio(i) for i in range(1, d + 1)}
    terms, phi_form, restriction_sum = _assemble_multilinear_terms(
        d=d, n=n, r=r, consts=consts, frobenius=frobenius,
        max_frobs=max_frobs, min_ratios_per_slot=min_ratios,
    )
    warnings = []
    if n <= d**d:
        warnings.append("premise_n_not_large: n <= d^d at this desk scale")
    extras = {
        "phi_form_terms": phi_form,
        "restriction_sum": restriction_sum,
        "gamma": gp.to_json_dict(),
    }
    if include_spectral_diagnostic:
        # diagnostic only, excluded from the certificate: n^(d-2) * ||A_i^T A_i||_2
        extras["spectral_diagnostic"] = {
            str(i): float(n) ** (d - 2) * _gram_spectral(f, i) for i in range(1, d + 1)
        }
    return _make_report(
        kind="multilinear",
        descriptor={"dims": list(f.dims), "nnz": f.nnz},
        r=r,
        terms=terms,
        constants_dict=consts.as_dict(d),
        warnings=tuple(warnings),
        extras=extras,
    )


def _gram_spectral(f: CoeffTensor, i: int, iterations: int = 200) -> float:
    """||A_i^T A_i||_2 = ||A_i||_2^2 by power iteration through matvecs."""
    mat = matrixise(f, i)
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = mat.matvec(v)
        bv = np.bincount(mat.cols, weights=mat.vals * w[mat.rows], minlength=mat.shape[1])
        new_lam = float(v @ bv)
        nb = np.linalg.norm(bv)
        if nb == 0.0:
            return 0.0
        v = bv / nb
        if abs(new_lam - lam) <= 1e-12 * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    return abs(lam)


# -- quadratic certificate ---------------------------------------------------


def quadratic_normalize(M: CoeffTensor, x: float) -> tuple[CoeffTensor, float]:
    """Resilience-preserving normal form of a coupled quadratic chaos.

    Antisymmetric parts vanish on the sign cube and the diagonal contributes
    the constant trace, so  xi^T M xi = trace(M) + xi^T M' xi  with M' the
    zero-diagonal symmetric part.  Targets shift accordingly.
    """
    if M.degree != 2 or M.dims[0] != M.dims[1]:
        raise ValueError("quadratic normalization expects a square degree-2 tensor")
    A = M.to_matrix()
    sym = 0.5 * (A + A.T)
    np.fill_diagonal(sym, 0.0)
    return CoeffTensor.from_matrix(sym), float(x - np.trace(A))


def quadratic_bound(
    M: CoeffTensor, r: int, consts: ConstantSet = DEFAULT_CONSTANTS
) -> BoundReport:
    """Certificate for the coupled quadratic form xi^T M xi.

    The bilinear-style composite of the normalized matrix enters under a
    fourth root (decoupling loses a power), plus a c4/n tail from controlling
    the sup-norm of M xi.  Diagonal matrices normalize to zero and are
    rejected: their chaos is constant.
    """
    normalized, _ = quadratic_normalize(M, 0.0)
    if normalized.nnz == 0:
        raise DegenerateChaosError(
            "the quadratic form is constant on the sign cube (zero after "
            "symmetrization and diagonal removal)"
        )
    n = M.dims[0]
    r = _check_r(r, n)
    profile = matrix_profile(normalized)
    f_val, g_val = ingredients_from_profile(profile, n, max(r, 1))
    if r == 0:
        g_val = 0.0
    inner = {
        "f_term": consts.c1 * r * f_val,
        "g_term": consts.c2 * r * g_val,
        "exp_term": math.exp(-consts.c3 * profile.stable_rank),
    }
    terms = {
        "root_term": sum(inner.values()) ** 0.25,
        "tail_term": consts.c4 / n,
    }
    return _make_report(
        kind="quadratic",
        descriptor={"dims": list(M.dims), "nnz": M.nnz},
        r=r,
        terms=terms,
        constants_dict=consts.as_dict(),
        extras={"inner_terms": inner, "normalized_profile": profile.as_dict()},
    )


# -- block-diagonal closed form ----------------------------------------------


def _block_gamma_squared(n: int, w: int, d: int, s: int) -> float:
    """Exact squared derivative norm of the width-w block tensor at half-order s.

    Per difference key the Gram accumulation is 2^s * w^(d-s); keys count
    blocks times position choices times unordered direction pairs.
    """
    acc = float(2**s * w ** (d - s))
    keys = (n // w) * math.comb(d - 1, s) * math.comb(w, 2) ** s
    multiplicity = math.factorial(s) * 2**s
    return multiplicity * keys * acc * acc


def block_tensor_bound(
    n: int, w: int, d: int, r: int,
    consts: ConstantSet = DEFAULT_CONSTANTS,
    scale: float = 1.0,
) -> BoundReport:
    """Closed-form multilinear certificate of the block-diagonal tensor.

    All certificate quantities of the width-w block tensor have closed
    forms -- squared Frobenius norm (n/w) * w^d, largest restriction
    Frobenius norm w^((d-|I|)/2), and the derivative norms above -- so the
    report is computed without materializing the tensor and agrees term by
    term with the materialized run.  The scaling factor multiplies every
    coefficient and cancels from every term; it is validated and then plays
    no role.
    """
    if d < 2:
        raise ValueError("block tensors need degree >= 2")
    if w < 1 or n < 1 or n % w != 0:
        raise ValueError(f"block width must divide the dimension (n={n}, w={w})")
    if scale == 0.0:
        raise ValueError("scale must be nonzero")
    r = _check_r(r, n)
    frobenius = math.sqrt((n // w) * w**d)
    frob_sq = float((n // w) * w**d)
    max_frobs = {
        I: math.sqrt(w ** (d - len(I))) for I in _nonempty_subsets(d)
    }
    gamma_values = {k: math.sqrt(_block_gamma_squared(n, w, d, k // 2))
                    for k in range(2, 2 * (d - 1) + 1, 2)}
    min_ratio = min(frob_sq / g if g > 0 else math.inf for g in gamma_values.values())
    min_ratios = {i: min_ratio for i in range(1, d + 1)}
    terms, phi_form, restriction_sum = _assemble_multilinear_terms(
        d=d, n=n, r=r, consts=consts, frobenius=frobenius,
        max_frobs=max_frobs, min_ratios_per_slot=min_ratios,
    )
    warnings = []
    if w == n:
        warnings.append("single_block: n/w = 1, no exponential decay")
    log_n = math.log(n)
    extras = {
        "phi_form_terms": phi_form,
        "restriction_sum": restriction_sum,
        "gamma_closed_form": {str(k): v for k, v in sorted(gamma_values.items())},
        "concentration_ratio": min_ratio,
        "aas_resilience": {
            "formula": "sqrt(w/log n) * (n/w)^(1/(2d))",
            "value": math.sqrt(w / log_n) * (n / w) ** (1.0 / (2 * d)),
        },
    }
    return _make_report(
        kind="block",
        descriptor={"n": n, "w": w, "d": d},
        r=r,
        terms=terms,
        constants_dict=consts.as_dict(d),
        warnings=tuple(warnings),
        extras=extras,
    )
