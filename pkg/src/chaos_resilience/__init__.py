"""Resilience certificates for sign chaos, with exact desk-scale oracles.

A degree-d multilinear form evaluated on independent random sign vectors
concentrates; its *resilience* at a value x is the least number of
adversarial sign flips after which the form attains x.  This package
computes instance-dependent certificates bounding the probability that the
resilience is at most r -- for bilinear, quadratic, and arbitrary-degree
decoupled chaos -- and validates every computable ingredient against exact
brute-force oracles and seeded Monte-Carlo estimators at desk scale.

Public index convention: slots, dimension sets, directions, and index tuples
are 1-based, matching standard mathematical notation; numpy-internal storage
is 0-based.
"""

from .bounds import (
    BoundReport,
    ConstantSet,
    RegimeGuarantee,
    bilinear_bound,
    bilinear_regime,
    block_tensor_bound,
    flip_radius_bilinear,
    flip_radius_multilinear,
    multilinear_bound,
    quadratic_bound,
    quadratic_normalize,
    young_modulus,
    young_modulus_inverse,
)
from .empirical import (
    AtomProbability,
    ConcentrationReport,
    DecouplingPartition,
    EmpiricalCdf,
    ResilienceResult,
    atom_probability,
    delta_exhaustive,
    exact_resilience,
    find_decoupling_partition,
    levy_concentration,
    resilience_distribution,
    verify_concentration,
)
from .errors import (
    DegenerateChaosError,
    DimensionMismatchError,
    GuardExceededError,
    TensorFormatError,
)
from .gamma import GammaProfile, gamma_norm, gamma_oracle, gamma_profile
from .generators import (
    block_matrix,
    block_tensor,
    identity_matrix,
    random_sign_matrix,
    random_sparse,
)
from .io import load_tensor, reports_to_csv, save_tensor, tensor_from_dict, tensor_to_dict
from .matrixisation import (
    Matrixisation,
    chaos_restriction_vector,
    matrixise,
    max_restriction_frobenius,
    restrict,
    restriction_sup_norm,
    vec_without_slot,
)
from .norms import NormProfile, bound_ingredients_bilinear, matrix_profile, tensor_profile
from .tensor import (
    CoeffTensor,
    SignEnsemble,
    evaluate_chaos,
    hamming_distance,
    is_ternary_vector,
    sample_ensemble,
    sample_lazy,
)

__version__ = "0.1.0"
