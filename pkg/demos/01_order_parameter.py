"""
Order parameter from exact steady states
========================================

Build the master-equation generator for a few spin lengths, solve for the
stationary state and compare <Jz>/j with the j -> inf curve sqrt(1 - lambda^2).
"""

import numpy as np

from spinqsd.analytic import jz_asymptote
from spinqsd.experiments import steady_point
from spinqsd.params import ModelParams

lambdas = np.round(np.arange(0.0, 2.01, 0.25), 2)
js = [10, 30, 100]

print("lambda  " + "  ".join(f"j={j:<6}" for j in js) + "  j=inf")
for lam in lambdas:
    vals = [steady_point(ModelParams.from_lambda(j, lam))["mean_jz_over_j"] for j in js]
    print(f"{lam:5.2f}   " + "  ".join(f"{v:8.5f}" for v in vals) + f"  {jz_asymptote(lam):7.5f}")

# Below lambda = 1 the finite-j values converge onto the asymptote; above it
# the order parameter decays towards zero as j grows.
