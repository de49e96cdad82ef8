import math

import numpy as np
import pytest

from spinqsd import analytic
from spinqsd.errors import MethodMismatch
from spinqsd.experiments import (
    Method,
    Observable,
    SweepSpec,
    beta_estimate,
    blocked_stderr,
    finite_size_scaling,
    fit_loglog,
    flow_portrait,
    log_grid,
    qsd_time_average,
    run_sweep,
    sample_trajectory,
    steady_point,
)
from spinqsd.params import ModelParams


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec((10, 5), (0.1,))
    with pytest.raises(ValueError):
        SweepSpec((5,), (0.2, 0.2))
    spec = SweepSpec((5, "11/2"), (0.1, 0.2), "var_jz", "qsd")
    assert spec.observable is Observable.VAR_JZ and spec.method is Method.QSD


def test_run_sweep_rows_and_failures(monkeypatch):
    import spinqsd.experiments as ex

    real = ex.steady_point

    def flaky(params, gap=False):
        if params.lam > 0.45:
            raise RuntimeError("boom")
        return real(params, gap)

    monkeypatch.setattr(ex, "steady_point", flaky)
    rows = run_sweep(SweepSpec((3, 4), (0.0, 0.5)))
    assert [(r["j"], r["lambda"]) for r in rows] == [(3, 0.0), (3, 0.5), (4, 0.0), (4, 0.5)]
    assert rows[0]["status"] == "ok" and rows[0]["value"] == pytest.approx(1)
    assert rows[1]["status"].startswith("error") and math.isnan(rows[1]["value"])
    assert rows[1]["asymptote"] == pytest.approx(math.sqrt(0.75))


def test_sweep_threads_give_same_rows():
    spec = SweepSpec((3,), (0.2, 0.7, 1.3), Observable.VAR_JZ)
    assert run_sweep(spec, threads=1) == run_sweep(spec, threads=3)


def test_blocked_stderr_white_noise():
    x = np.random.default_rng(0).normal(size=100_000)
    assert blocked_stderr(x, 100) == pytest.approx(1 / math.sqrt(len(x)), rel=0.15)
    with pytest.raises(ValueError):
        blocked_stderr(x[:10], 10)


def test_qsd_average_agrees_with_exact_small_j():
    p = ModelParams.from_lambda(8, 0.5)
    exact = steady_point(p)["mean_jz_over_j"]
    res = qsd_time_average(p, n_traj=200, t_burn=20, t_avg=40, dt=0.005, seed=1)
    assert abs(res["mean_jz_over_j"] - exact) < 4 * res["mean_stderr"] + 2e-3


def test_flow_portrait_closed_orbits_return():
    portrait = flow_portrait(ModelParams.from_lambda(None, 1.3), n_init=4, n_samples=50)
    assert np.max(np.abs(portrait.tracks[:, -1] - portrait.tracks[:, 0])) < 1e-6
    assert len(list(portrait.rows())) == 4 * 50


def test_flow_portrait_below_threshold_converges():
    p = ModelParams.from_lambda(None, 0.6)
    portrait = flow_portrait(p, n_init=4, n_samples=10)
    target = analytic.fixed_points(p).mu_minus
    from spinqsd.spin import bloch_vector

    assert np.allclose(portrait.tracks[:, -1], bloch_vector(target), atol=1e-6)


def test_sample_trajectory_settles_below_threshold():
    p = ModelParams.from_lambda(500, 0.95)
    tr = sample_trajectory(p, "mu_plus", t_final=100, seed=0)
    assert tr.m is None
    assert abs(tr.final_label().mu - analytic.fixed_points(p).mu_minus) <= 5 / math.sqrt(500)


def test_sample_trajectory_torus_label_above_threshold():
    p = ModelParams.from_lambda(500, 1.05)
    tr = sample_trajectory(p, "mu_plus", t_final=50, seed=0, dt=0.02)
    assert tr.m is not None and np.all(np.abs(tr.m) <= 1)
    assert tr.m[0] == pytest.approx(-1)


def test_log_grid():
    g = log_grid(1e-6, 1.0)
    assert len(g) == 49 and g[0] == pytest.approx(1e-6) and g[-1] == pytest.approx(1.0)


def test_beta_on_power_law():
    eps = log_grid(1e-5, 1e-1)
    assert np.allclose(beta_estimate(lambda lam: (lam - 1) ** 0.7, eps), 0.7, atol=1e-12)
    assert np.allclose(beta_estimate((eps, 3 * eps**1.5), eps), 1.5, atol=1e-10)
    with pytest.raises(ValueError):
        beta_estimate(lambda lam: -1.0, eps)


def test_fit_loglog():
    js = np.array([8, 16, 32, 64])
    fit = fit_loglog(js, 2 * js ** -0.4)
    assert fit.slope == pytest.approx(-0.4) and fit.r_squared == pytest.approx(1)
    with pytest.raises(ValueError):
        fit_loglog([1, 2, 3], [1, 2, 3])


def test_scaling_requires_span_and_overlap():
    with pytest.raises(ValueError):
        finite_size_scaling((4, 8, 16, 32))
    with pytest.raises(MethodMismatch):
        finite_size_scaling((4, 8, 16, 32, 128), (32, 64), n_traj=4)


def test_scaling_detects_disagreeing_methods(monkeypatch):
    import spinqsd.experiments as ex

    def fake(params, **kw):
        return {"mean_jz_over_j": 0.9, "mean_stderr": 1e-3}

    monkeypatch.setattr(ex, "qsd_time_average", fake)
    with pytest.raises(MethodMismatch):
        finite_size_scaling((4, 8, 16, 32, 128), (16, 32))
