"""
Single quantum-state-diffusion trajectories at j = 500
======================================================

Each trajectory stays a spin coherent state, so one complex number tracks it.
Starting at the repeller mu_+, the noise kicks it off; below threshold it
settles near mu_-, above it the torus label m wanders slowly over [-1, 1].
"""

import numpy as np

from spinqsd import analytic
from spinqsd.experiments import sample_trajectory
from spinqsd.params import ModelParams

j = 500
below = ModelParams.from_lambda(j, 0.95)
tr = sample_trajectory(below, "mu_plus", t_final=100.0, seed=1)
dist = abs(tr.final_label().mu - analytic.fixed_points(below).mu_minus)
print(f"lambda=0.95: final distance to mu_- is {dist:.4f} (noise scale 1/sqrt(j) = {1 / np.sqrt(j):.4f})")

above = ModelParams.from_lambda(j, 1.05)
tr = sample_trajectory(above, "mu_plus", t_final=2000.0, seed=1, dt=0.05, sample_every=5.0)
print(f"lambda=1.05: torus label over t in [0, 2000]: min {tr.m.min():.3f}, max {tr.m.max():.3f}")
hist, edges = np.histogram(tr.m, bins=8, range=(-1, 1))
for count, lo in zip(hist, edges):
    print(f"  m in [{lo:+.2f}, {lo + 0.25:+.2f}): " + "#" * int(60 * count / hist.max()))
