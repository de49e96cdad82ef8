import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinqsd.spin import (
    Chart,
    CoherentLabel,
    SpinQuantum,
    as_spin,
    bloch_vector,
    bloch_vectors,
    build_operators,
    coherent_state,
    coherent_states,
    mirror_label,
)


@pytest.mark.parametrize("text,two_j", [("1/2", 1), ("5/2", 5), (3, 6), (2.5, 5), ("100", 200)])
def test_spin_quantum_parsing(text, two_j):
    assert SpinQuantum.from_j(text).two_j == two_j


@pytest.mark.parametrize("bad", ["1/3", 0.3, "-1"])
def test_spin_quantum_rejects(bad):
    with pytest.raises(ValueError):
        SpinQuantum.from_j(bad)


@pytest.mark.parametrize("two_j", [1, 2, 3, 10, 61, 400, 2000])
def test_commutators_and_casimir(two_j):
    ops = build_operators(SpinQuantum(two_j))
    j = two_j / 2
    comm = ops.jx @ ops.jy - ops.jy @ ops.jx
    assert np.max(np.abs(comm - 1j * ops.jz)) < 1e-10 * max(1, j)
    comm = ops.jz @ ops.jplus - ops.jplus @ ops.jz
    assert np.max(np.abs(comm - ops.jplus)) < 1e-10 * max(1, j)
    casimir = ops.jx @ ops.jx + ops.jy @ ops.jy + ops.jz @ ops.jz
    assert np.max(np.abs(casimir - j * (j + 1) * np.eye(ops.dim))) < 1e-9 * j * j


def test_north_pole_is_top_state():
    psi = coherent_state(3, 0j)
    assert psi[0] == pytest.approx(1) and np.allclose(psi[1:], 0)
    south = coherent_state(3, CoherentLabel.south_pole())
    assert south[-1] == pytest.approx(1)


@pytest.mark.parametrize("two_j", [4, 59, 61, 200])
def test_coherent_state_matches_rotation_expectations(two_j, rng):
    ops = build_operators(SpinQuantum(two_j))
    mu = complex(*rng.normal(size=2))
    psi = coherent_state(two_j / 2, CoherentLabel.from_mu(mu))
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)
    expect = np.array([np.vdot(psi, a @ psi).real for a in (ops.jx, ops.jy, ops.jz)])
    assert np.allclose(expect / (two_j / 2), bloch_vector(mu), atol=1e-10)


def test_log_domain_matches_direct_route():
    z = np.array([0.3 + 0.2j, -0.9j, 0.99])
    direct = coherent_states(SpinQuantum(60), z)
    from spinqsd import spin

    old = spin.LOG_BINOMIAL_THRESHOLD
    try:
        spin.LOG_BINOMIAL_THRESHOLD = 0
        logged = coherent_states(SpinQuantum(60), z)
    finally:
        spin.LOG_BINOMIAL_THRESHOLD = old
    assert np.allclose(direct, logged, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([3, 40, 101]))
def test_charts_describe_the_same_state(re, im, two_j):
    mu = complex(re, im)
    if abs(mu) < 1e-3:
        return
    north = coherent_state(two_j / 2, CoherentLabel(mu, Chart.NORTH))
    south = coherent_state(two_j / 2, CoherentLabel(1 / mu, Chart.SOUTH))
    assert abs(np.vdot(north, south)) == pytest.approx(1, abs=1e-9)
    assert np.allclose(bloch_vectors(mu), bloch_vectors(1 / mu, True), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_bloch_vector_is_unit(re, im):
    n = bloch_vector(complex(re, im))
    assert np.linalg.norm(n) == pytest.approx(1, abs=1e-12)


def test_label_chart_selection_and_poles():
    assert CoherentLabel.from_mu(0.5).chart is Chart.NORTH
    lb = CoherentLabel.from_mu(2j)
    assert lb.is_south and lb.z == pytest.approx(-0.5j) and lb.mu == pytest.approx(2j)
    assert CoherentLabel.from_mu(complex("inf")).z == 0
    assert math.isinf(CoherentLabel.south_pole().mu.real)
    with pytest.raises(ZeroDivisionError):
        CoherentLabel.south_pole().to_chart(Chart.NORTH)
    with pytest.raises(ValueError):
        CoherentLabel(complex("nan"))


def test_mirror_label_flips_x(rng):
    for _ in range(5):
        mu = complex(*rng.normal(size=2))
        for lb in (CoherentLabel(mu), CoherentLabel(mu, Chart.SOUTH)):
            n = bloch_vector(lb)
            nm = bloch_vector(mirror_label(lb))
            assert np.allclose(nm, [-n[0], n[1], n[2]], atol=1e-14)


def test_as_spin_passthrough():
    s = SpinQuantum(5)
    assert as_spin(s) is s
    assert str(s) == "5/2" and str(SpinQuantum(4)) == "2"
