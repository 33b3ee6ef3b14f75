"""The identity matrix, end to end.

The bilinear chaos of the identity is a plain sum of n independent sign
products, so everything about it is computable by hand: the largest atom is
the central binomial probability, the resilience at zero is exactly half the
absolute sum, and the certificate saturates once r passes ~ sqrt(n)/2.  This
script walks that arc and compares every certificate quantity with the
matching exact or Monte-Carlo value.
"""

import math

from chaos_resilience import (
    atom_probability,
    bilinear_bound,
    bilinear_regime,
    exact_resilience,
    identity_matrix,
    matrix_profile,
    resilience_distribution,
    sample_ensemble,
)

n = 16
M = identity_matrix(n)

print(f"== identity matrix, n = {n}")
profile = matrix_profile(M)
print(f"frobenius {profile.frobenius:.4f}, spectral {profile.spectral:.4f}, "
      f"stable rank {profile.stable_rank:.1f}")

guarantee = bilinear_regime(M)
print(f"regime: {guarantee.regime}, guarantee {guarantee.formula} = {guarantee.value:.3f} "
      f"(the sparse guarantee is sqrt(n))")

print("\ncertificate sweep (terms are c1*r*f, c2*r*g, exp(-c3*sr)):")
for r in range(1, 9):
    rep = bilinear_bound(M, r)
    print(f"  r={r}: f={rep.terms['f_term']:.3f} g={rep.terms['g_term']:.3f} "
          f"exp={rep.terms['exp_term']:.2e} total={rep.total:.3f}")
saturation = next(r for r in range(1, n + 1)
                  if bilinear_bound(M, r).total_unclamped >= 1.0)
print(f"certificate saturates at r = {saturation} (~ sqrt(n)/2 = {math.sqrt(n)/2:.1f})")

print("\nexact side:")
atom = atom_probability(M, "exact")
print(f"largest atom = {atom.value} (central binomial C({n},{n//2})/2^{n} = "
      f"{math.comb(n, n//2) / 2**n:.6f})")

ensemble = sample_ensemble((n, n), seed=1)
overlap = int(ensemble.vectors[0] @ ensemble.vectors[1])
res = exact_resilience(M, ensemble, 0.0)
print(f"one seeded ensemble: psi.xi = {overlap}, res_0 = {res.value} "
      f"(law: |psi.xi|/2 = {abs(overlap)/2}), found by {res.method}")

print("\nempirical CDF of res_0 at n = 4 (2000 seeded trials):")
cdf = resilience_distribution(identity_matrix(4), 0.0, r_max=3, trials=2000, seed=7)
for r, est, se in zip(cdf.grid, cdf.estimates, cdf.stderrs):
    bound = bilinear_bound(identity_matrix(4), r).total if r >= 1 else None
    certified = f"  certificate {bound:.3f}" if bound is not None else ""
    print(f"  P(res <= {r}) = {est:.3f} ± {se:.3f}{certified}")
print("exact P(res <= 0) = C(4,2)/16 =", 6 / 16)
