"""
Variance of Jz above threshold and its local exponent
=====================================================

The j -> inf steady state above threshold mixes torus states with a known
distribution of m. Its Jz variance has a closed form; finite-j exact values
approach it as j grows. Near lambda = 1 the variance is not a power law: the
local exponent beta(eps) = d ln var / d ln eps drifts with eps.
"""

import numpy as np

from spinqsd import analytic
from spinqsd.experiments import beta_estimate, steady_point
from spinqsd.params import ModelParams

lam = 1.5
print(f"closed form at lambda={lam}: {analytic.variance_asymptote(lam):.5f}")
first, second = analytic.mixed_jz_moments(ModelParams.from_lambda(None, lam))
print(f"torus-mixture quadrature:      {second - first**2:.5f}")
for j in (25, 50, 100):
    v = steady_point(ModelParams.from_lambda(j, lam))["var_jz_over_j2"]
    print(f"exact steady state, j={j:<4}  {v:.5f}")

# Sampling the torus distribution by inverse CDF
u = np.random.default_rng(0).random(100_000)
m = analytic.torus_distribution_sample(u, lam)
print(f"sampled torus labels: mean {m.mean():+.4f}, <m^2> {np.mean(m**2):.4f}")

print("\n  eps       beta(eps)   1 + 1/ln(eps)")
for eps, b in zip([1e-6, 1e-4, 1e-2], beta_estimate(analytic.variance_asymptote, [1e-6, 1e-4, 1e-2])):
    print(f"  {eps:7.0e}   {b:.4f}      {1 + 1 / np.log(eps):.4f}")
