import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from spinqsd import analytic
from spinqsd.errors import AtFixedPoint, Critical, DegenerateDrive, NotCyclic
from spinqsd.liouvillian import mirror_rho
from spinqsd.params import ModelParams
from spinqsd.spin import CoherentLabel, bloch_vectors, build_operators

THERMO = lambda lam: ModelParams.from_lambda(None, lam)  # noqa: E731


def test_fixed_points_are_stationary():
    for lam in (0.3, 0.99, 1.01, 2.5):
        p = THERMO(lam)
        fp = analytic.fixed_points(p)
        assert abs(analytic.deterministic_rhs(fp.mu_plus, p)) < 1e-12
        assert abs(analytic.deterministic_rhs(fp.mu_minus, p)) < 1e-12


def test_fixed_point_stability_below_threshold():
    rates = analytic.fixed_point_rates(THERMO(0.6))
    assert rates.mu_minus.real < 0 < rates.mu_plus.real


def test_degenerate_drive():
    with pytest.raises(DegenerateDrive):
        analytic.fixed_points(ModelParams(None, 0.0))
    with pytest.raises(ValueError):
        analytic.fixed_points(ModelParams.from_lambda(None, 1.2, omega_z=0.1))


def test_period():
    assert analytic.torus_period(THERMO(math.sqrt(2))) == pytest.approx(2 * math.pi)
    with pytest.raises(NotCyclic):
        analytic.torus_period(THERMO(0.9))


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.999, 0.999), st.floats(-math.pi, math.pi), st.sampled_from([0.5, 1.5, 3.0]))
def test_torus_coordinates_round_trip(m, phi, lam):
    p = THERMO(lam)
    lb = analytic.analytic_trajectory(analytic.TorusCoords(m, phi), p, 0.0)
    back = analytic.to_torus_coords(lb, p)
    assert back.m == pytest.approx(m, abs=1e-9)
    assert math.remainder(back.phi - phi, 2 * math.pi) == pytest.approx(0, abs=1e-8)


def test_at_fixed_point():
    p = THERMO(1.5)
    fp = analytic.fixed_points(p)
    assert analytic.to_torus_coords(fp.mu_minus, p).m == 1
    with pytest.raises(AtFixedPoint):
        analytic.to_torus_coords(fp.mu_minus, p, strict=True)


@pytest.mark.parametrize("lam", [0.5, 1.05, 2.0])
def test_closed_form_matches_numerical_flow(lam):
    p = THERMO(lam)
    rng = np.random.default_rng(3)
    mu0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    t = np.linspace(0, 5, 6)
    z, south = analytic.integrate_deterministic(mu0, p, t, dt=1e-3)
    for i, mu in enumerate(mu0):
        za, sa = analytic.analytic_labels(analytic.to_torus_coords(mu, p), p, t)
        assert np.max(np.abs(bloch_vectors(z[:, i], south[:, i]) - bloch_vectors(za, sa))) < 1e-9


def test_closed_form_refuses_critical_point():
    with pytest.raises(ValueError):
        analytic.analytic_labels(analytic.TorusCoords(0.0), THERMO(1.0), [0.0, 1.0])


def test_no_overflow_at_long_times():
    z, south = analytic.analytic_labels(analytic.TorusCoords(0.2, 1.0), THERMO(0.5), [1e4])
    assert np.all(np.isfinite(z))


def test_torus_state_trace_and_moment():
    p = THERMO(1.5)
    ops = build_operators(20)
    rho = analytic.torus_state(0.3, p, 20)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    z, south = analytic.torus_labels(0.3, p, 512)
    expect = 20 * bloch_vectors(z, south)[:, 2].mean()
    assert np.trace(ops.jz @ rho).real == pytest.approx(expect, abs=1e-9)


@pytest.mark.parametrize("m", [0.0, 0.4, -0.8, 0.99])
def test_torus_state_mirror(m):
    p = THERMO(1.7)
    a = analytic.torus_state(m, p, 15)
    b = analytic.torus_state(-m, p, 15)
    assert np.max(np.abs(mirror_rho(a) - b)) < 1e-10


def test_torus_state_requires_cycles():
    with pytest.raises(NotCyclic):
        analytic.torus_state(0.0, THERMO(0.7), 5)


@pytest.mark.parametrize("lam", [1.01, 1.5, 4.0])
def test_torus_distribution(lam):
    from scipy.integrate import quad

    total, _ = quad(lambda m: float(analytic.torus_distribution_pdf(m, lam)), -1, 1, epsabs=1e-13)
    assert total == pytest.approx(1, abs=1e-10)
    m = np.linspace(-1, 1, 11)
    assert np.allclose(analytic.torus_distribution_pdf(m, lam), analytic.torus_distribution_pdf(-m, lam),
                       atol=1e-14)
    assert analytic.torus_distribution_cdf(-1.0, lam) == pytest.approx(0, abs=1e-14)
    assert analytic.torus_distribution_cdf(1.0, lam) == pytest.approx(1, abs=1e-14)


def test_torus_sampler_ks():
    lam = 1.5
    u = np.random.default_rng(0).random(1_000_000)
    sample = analytic.torus_distribution_sample(u, lam)
    ks = stats.kstest(sample, lambda m: analytic.torus_distribution_cdf(m, lam)).statistic
    assert ks <= 2e-3


def test_mixture_reproduces_variance_closed_form():
    for lam in (1.2, 1.5, 3.0):
        first, second = analytic.mixed_jz_moments(THERMO(lam))
        assert abs(first) < 1e-12
        assert second - first**2 == pytest.approx(analytic.variance_asymptote(lam), rel=1e-6)


def test_mixed_state_density_level():
    p = THERMO(1.5)
    j = 30
    rho = analytic.mixed_steady_state(p, j, n_quad_m=64, n_quad_phi=256)
    ops = build_operators(j)
    var = np.trace(ops.jz @ ops.jz @ rho).real / j**2 - (np.trace(ops.jz @ rho).real / j) ** 2
    _, second = analytic.mixed_jz_moments(p, j=j, n_quad_m=64, n_quad_phi=256)
    assert var == pytest.approx(second, rel=1e-9)
    assert np.max(np.abs(mirror_rho(rho) - rho)) < 1e-10


def test_variance_limits():
    assert analytic.variance_asymptote(1e3) == pytest.approx(1 / 3, rel=1e-3)
    assert analytic.variance_asymptote(1 + 1e-9) < 1e-3
    with pytest.raises(ValueError):
        analytic.variance_asymptote(1.0)


def test_order_parameter_asymptote():
    assert analytic.jz_asymptote(0.0) == 1
    assert analytic.jz_asymptote(0.6) == pytest.approx(0.8)
    assert analytic.jz_asymptote(1.4) == 0


def test_relaxation_time():
    assert analytic.relaxation_time(1 + 1e-6) == pytest.approx(1 / math.sqrt(2e-6), rel=1e-5)
    assert analytic.relaxation_time(1 - 1e-6) == pytest.approx(707.1, rel=1e-3)
    with pytest.raises(Critical):
        analytic.relaxation_time(1.0)


def test_label_from_inf_is_south_pole():
    p = THERMO(1.5)
    c = analytic.to_torus_coords(CoherentLabel.south_pole(), p)
    assert -1 < c.m < 1
