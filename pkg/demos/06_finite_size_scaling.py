"""
Finite-size scaling at the critical point
=========================================

At lambda = 1 the order parameter vanishes with system size as a power law.
Small j use exact steady states, large j use trajectory time averages; the two
must agree where they overlap. This is the quick budget (seconds); the
CLI command `spinqsd figure --which 5 --budget full` runs the full one.
"""

from spinqsd.experiments import finite_size_scaling

fit = finite_size_scaling((4, 8, 16, 32, 64, 128), (32, 64), n_traj=400, seed=0)
for row in fit.table:
    print(f"j={row['j']:<6g} {row['method']:<6} <Jz>/j = {row['mean_jz_over_j']:.5f} +- {row['stderr']:.5f}")
print(f"log-log slope {fit.slope:.4f} (r^2 = {fit.r_squared:.5f})")
