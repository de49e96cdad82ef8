"""Figure-level pipelines: each returns a CSV header and rows.

Two budgets exist. ``quick`` uses reduced system sizes and ensembles and
finishes each figure in a few minutes on one core; ``full`` uses the sizes of
the acceptance suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import analytic
from .experiments import (
    Method,
    Observable,
    SweepSpec,
    beta_estimate,
    finite_size_scaling,
    flow_portrait,
    log_grid,
    run_sweep,
    sample_trajectory,
)
from .params import ModelParams

BUDGETS = ("quick", "full")

FIG_COLUMNS = {
    "1": ["j", "lambda", "mean_jz_over_j", "asymptote", "status"],
    "2": ["lambda", "track_id", "t", "nx", "ny", "nz"],
    "3": ["lambda", "t", "nx", "ny", "nz", "m"],
    "4a": ["j", "lambda", "var_jz_over_j2", "asymptote", "status"],
    "4b": ["epsilon", "beta", "beta_model"],
    "5": ["j", "mean_jz_over_j", "method", "stderr"],
}


def _grid(lo, hi, step):
    return tuple(np.round(np.arange(lo, hi + 0.5 * step, step), 10))


def figure_1(budget="quick", seed=0, threads=1):
    js = (10, 30) if budget == "quick" else (10, 30, 100)
    spec = SweepSpec(js, _grid(0.0, 2.0, 0.1 if budget == "quick" else 0.05), Observable.MEAN_JZ, Method.EXACT)
    rows = run_sweep(spec, threads=threads)
    return [{"j": r["j"], "lambda": r["lambda"], "mean_jz_over_j": r["value"], "asymptote": r["asymptote"],
             "status": r["status"]} for r in rows], {}


def figure_2(budget="quick", seed=0, threads=1):
    n_init = 8 if budget == "quick" else 16
    rows = []
    for lam in (0.95, 1.05):
        rows.extend(flow_portrait(ModelParams.from_lambda(None, lam), n_init=n_init).rows())
    return rows, {}


def figure_3(budget="quick", seed=0, threads=1):
    j = 500
    t_hop = 2000.0 if budget == "quick" else 50.0 * j
    rows = []
    for lam, t_final, every in ((0.95, 100.0, 0.5), (1.05, t_hop, 5.0)):
        params = ModelParams.from_lambda(j, lam)
        tr = sample_trajectory(params, "mu_plus", t_final=t_final, seed=seed,
                               dt=0.01 if lam < 1 else 0.05, sample_every=every)
        rows.extend({"lambda": lam, **r} for r in tr.rows())
    return rows, {"seed": seed}


def figure_4a(budget="quick", seed=0, threads=1):
    js = (25, 50) if budget == "quick" else (25, 50, 100)
    spec = SweepSpec(js, _grid(0.5, 2.5, 0.1 if budget == "quick" else 0.05), Observable.VAR_JZ, Method.EXACT)
    rows = run_sweep(spec, threads=threads)
    return [{"j": r["j"], "lambda": r["lambda"], "var_jz_over_j2": r["value"], "asymptote": r["asymptote"],
             "status": r["status"]} for r in rows], {}


def figure_4b(budget="quick", seed=0, threads=1):
    eps = log_grid(1e-6, 1.0)
    beta = beta_estimate(analytic.variance_asymptote, eps)
    rows = [{"epsilon": e, "beta": b, "beta_model": 1 + 1 / math.log(e) if e < 1 else math.nan}
            for e, b in zip(eps, beta)]
    return rows, {}


def figure_5(budget="quick", seed=0, threads=1):
    if budget == "quick":
        fit = finite_size_scaling((4, 8, 16, 32, 64, 128), (32, 64), n_traj=400, seed=seed, threads=threads)
    else:
        fit = finite_size_scaling((8, 16, 32, 64, 128, 256), (64, 128, 512, 1024), n_traj=1000, seed=seed,
                                  threads=threads)
    return fit.table, {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}


FIGURES = {
    "1": figure_1,
    "2": figure_2,
    "3": figure_3,
    "4a": figure_4a,
    "4b": figure_4b,
    "5": figure_5,
}
