"""Closed-form results for the noiseless flow and its torus-averaged steady states.

The deterministic label flow

    d mu/dt = -i (omega/2)(1 - mu**2) - kappa_tilde mu

is a Riccati equation with fixed points ``mu_pm``. In the Moebius coordinate
``w = (mu - mu_+)/(mu - mu_-)`` it is linear, ``w(t) = w(0) exp(kappa_tilde s t)``
with ``s = sqrt(1 - lam**2)`` (principal branch), where ``lam = omega/kappa_tilde``.
For ``lam > 1`` the modulus of ``w`` is conserved and the orbits are closed;
``|w|**2 = (1 + m)/(1 - m)`` defines the torus label ``m`` and ``arg w`` the angle.

Functions taking ``lam`` alone (``jz_asymptote``, ``torus_distribution_*``,
``variance_asymptote``) describe the thermodynamic limit, where ``kappa_tilde = kappa``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import AtFixedPoint, Critical, DegenerateDrive, NotCyclic
from .params import ModelParams
from .spin import Chart, CoherentLabel, as_spin, bloch_vectors, coherent_states

__all__ = [
    "FixedPoints",
    "TorusCoords",
    "fixed_points",
    "fixed_point_rates",
    "deterministic_rhs",
    "deterministic_rhs_south",
    "integrate_deterministic",
    "analytic_trajectory",
    "analytic_labels",
    "torus_period",
    "to_torus_coords",
    "torus_labels",
    "torus_state",
    "jz_asymptote",
    "torus_distribution_pdf",
    "torus_distribution_cdf",
    "torus_distribution_sample",
    "mixed_steady_state",
    "mixed_jz_moments",
    "variance_asymptote",
    "relaxation_time",
]


@dataclass(frozen=True)
class FixedPoints:
    mu_plus: complex
    mu_minus: complex


@dataclass(frozen=True)
class TorusCoords:
    """Torus label ``m`` in [-1, 1] and angle ``phi``; ``m = +1`` is ``mu_-``, ``m = -1`` is ``mu_+``."""

    m: float
    phi: float = 0.0

    def __post_init__(self):
        if not abs(self.m) <= 1:
            raise ValueError(f"torus label must satisfy |m| <= 1, got {self.m}")


def _flow_params(params: ModelParams):
    if params.omega_z:
        raise ValueError("closed-form flow results assume omega_z = 0")
    if params.omega <= 0:
        raise DegenerateDrive("omega = 0: the only fixed point is mu = 0")
    return params.omega, params.kappa_tilde


def fixed_points(params: ModelParams) -> FixedPoints:
    omega, kt = _flow_params(params)
    s = cmath.sqrt(1 - (omega / kt) ** 2)
    return FixedPoints(-1j * kt / omega * (1 + s), -1j * kt / omega * (1 - s))


def fixed_point_rates(params: ModelParams) -> FixedPoints:
    """Linearized growth rates ``f'(mu)`` of the flow at ``mu_+`` and ``mu_-``."""
    fp = fixed_points(params)
    omega, kt = params.omega, params.kappa_tilde
    return FixedPoints(1j * omega * fp.mu_plus - kt, 1j * omega * fp.mu_minus - kt)


def deterministic_rhs(mu, params: ModelParams):
    mu = np.asarray(mu, dtype=complex)
    return -0.5j * params.omega * (1 - mu**2) - params.kappa_tilde * mu


def deterministic_rhs_south(nu, params: ModelParams):
    """Flow in the chart ``nu = 1/mu``."""
    nu = np.asarray(nu, dtype=complex)
    return 0.5j * params.omega * (nu**2 - 1) + params.kappa_tilde * nu


def integrate_deterministic(mu0, params: ModelParams, sample_times, dt: float = 1e-3,
                            radius: float = 2.0):
    """Fixed-step RK4 for the noiseless flow, switching to the south chart when ``|mu| > radius``.

    ``mu0`` may be an array of labels (complex, or ``CoherentLabel``). Returns
    ``(z, south)`` arrays of shape ``(len(sample_times), n)``.
    """
    labels = np.atleast_1d(np.asarray(mu0, dtype=object))
    labels = [x if isinstance(x, CoherentLabel) else CoherentLabel.from_mu(x) for x in labels]
    z = np.array([lb.z for lb in labels], dtype=complex)
    south = np.array([lb.is_south for lb in labels], dtype=bool)
    sample_times = np.asarray(sample_times, dtype=float)

    def rhs(x, s):
        return np.where(s, deterministic_rhs_south(x, params), deterministic_rhs(x, params))

    out_z = np.empty((len(sample_times), len(z)), dtype=complex)
    out_s = np.empty((len(sample_times), len(z)), dtype=bool)
    t = 0.0
    for k, ts in enumerate(sample_times):
        while t < ts - 1e-13:
            h = min(dt, ts - t)
            k1 = rhs(z, south)
            k2 = rhs(z + 0.5 * h * k1, south)
            k3 = rhs(z + 0.5 * h * k2, south)
            k4 = rhs(z + h * k3, south)
            z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
            flip = np.abs(z) > radius
            if np.any(flip):
                z = np.where(flip, 1 / np.where(flip, z, 1), z)
                south = south ^ flip
        out_z[k], out_s[k] = z, south
    return out_z, out_s


def analytic_labels(coords0: TorusCoords, params: ModelParams, t):
    """Vectorized closed-form orbit; returns ``(z, south)`` for each time in ``t``.

    The chart is chosen per point so that ``|z| <= 1``, which covers the
    transient passage of the orbit through ``mu = inf``.
    """
    omega, kt = _flow_params(params)
    lam = omega / kt
    if lam == 1:
        raise ValueError("the closed form is singular at lam = 1; integrate numerically")
    fp = fixed_points(params)
    t = np.asarray(t, dtype=float)
    s = cmath.sqrt(1 - lam**2)
    a = math.sqrt(1 + coords0.m)
    b = math.sqrt(1 - coords0.m)
    # log E = i phi0 + kt s t; for lam < 1 the real part grows and the orbit falls into mu_-
    log_e = 1j * coords0.phi + kt * s * t
    big = log_e.real > 0
    e_small = np.exp(np.where(big, -log_e, log_e))
    # for |E| > 1 divide numerator and denominator by E to avoid overflow
    num = np.where(big, fp.mu_minus * a - fp.mu_plus * b * e_small, fp.mu_minus * a * e_small - fp.mu_plus * b)
    den = np.where(big, a - b * e_small, a * e_small - b)
    south = np.abs(num) > np.abs(den)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(south, den / num, num / den)
    return z, south


def analytic_trajectory(coords0: TorusCoords, params: ModelParams, t: float) -> CoherentLabel:
    z, south = analytic_labels(coords0, params, t)
    return CoherentLabel(complex(z), Chart.SOUTH if bool(south) else Chart.NORTH)


def torus_period(params: ModelParams) -> float:
    omega, kt = _flow_params(params)
    lam = omega / kt
    if lam <= 1:
        raise NotCyclic(f"no closed orbits for omega/kappa_tilde = {lam:.6g} <= 1")
    return 2 * math.pi / (kt * math.sqrt(lam**2 - 1))


def to_torus_coords(label, params: ModelParams, strict: bool = False) -> TorusCoords:
    """Invert the closed-form orbit at ``t = 0``.

    At a fixed point the angle is undefined and returned as 0, or
    ``AtFixedPoint`` is raised when ``strict`` is set.
    """
    if not isinstance(label, CoherentLabel):
        label = CoherentLabel.from_mu(label)
    fp = fixed_points(params)
    if label.is_south:
        p = 1 - fp.mu_plus * label.z
        q = 1 - fp.mu_minus * label.z
    else:
        p = label.z - fp.mu_plus
        q = label.z - fp.mu_minus
    ap, aq = abs(p) ** 2, abs(q) ** 2
    m = (ap - aq) / (ap + aq)
    if p == 0 or q == 0:
        if strict:
            raise AtFixedPoint("label is a fixed point of the flow; the angle is undefined")
        return TorusCoords(float(np.sign(m)), 0.0)
    return TorusCoords(float(m), float(np.angle(p * np.conj(q))))


def torus_labels(m: float, params: ModelParams, n_quad: int = 512):
    """Labels on torus ``m`` at equally spaced angles; returns ``(z, south)``."""
    fp = fixed_points(params)
    a, b = math.sqrt(1 + m), math.sqrt(1 - m)
    e = np.exp(2j * np.pi * np.arange(n_quad) / n_quad)
    num = fp.mu_minus * a * e - fp.mu_plus * b
    den = a * e - b
    south = np.abs(num) > np.abs(den)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(south, den / num, num / den)
    return z, south


def torus_state(m: float, params: ModelParams, j, n_quad: int = 512) -> np.ndarray:
    """Time average of the coherent state over one period of torus ``m``.

    The angle advances uniformly in time, so the average is a trapezoidal sum
    over equally spaced angles, which is spectrally accurate for this periodic
    integrand.
    """
    torus_period(params)
    if not abs(m) <= 1:
        raise ValueError(f"torus label must satisfy |m| <= 1, got {m}")
    z, south = torus_labels(m, params, n_quad)
    psi = coherent_states(as_spin(j), z, south)
    return psi.T @ psi.conj() / n_quad


def jz_asymptote(lam: float) -> float:
    """Thermodynamic-limit order parameter ``<Jz>/j``."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return math.sqrt(1 - lam**2) if lam < 1 else 0.0


def _pdf_consts(lam):
    a = math.sqrt(1 + 2 * lam**2)
    return a, math.atanh(1 / a)


def torus_distribution_pdf(m, lam: float):
    """Stationary density of the torus label under noise-driven hopping."""
    a, at = _pdf_consts(lam)
    m = np.asarray(m, dtype=float)
    return 0.5 * a / at / (a * a - m * m)


def torus_distribution_cdf(m, lam: float):
    a, at = _pdf_consts(lam)
    m = np.asarray(m, dtype=float)
    return 0.5 * (np.arctanh(m / a) / at + 1)


def torus_distribution_sample(u, lam: float):
    """Inverse-CDF sampler: maps uniforms in (0, 1) to torus labels."""
    a, at = _pdf_consts(lam)
    u = np.asarray(u, dtype=float)
    return a * np.tanh((2 * u - 1) * at)


def _mixture_nodes(params, n_quad_m):
    torus_period(params)
    x, w = np.polynomial.legendre.leggauss(n_quad_m)
    return x, w * torus_distribution_pdf(x, params.lam)


def mixed_steady_state(params: ModelParams, j, n_quad_m: int = 128, n_quad_phi: int = 512) -> np.ndarray:
    """Mixture of torus states weighted by the stationary torus distribution.

    The torus distribution uses ``params.lam``; the tori use the flow of
    ``params`` (pass ``j=None`` in ``params`` for the thermodynamic flow).
    """
    spin = as_spin(j)
    xs, ws = _mixture_nodes(params, n_quad_m)
    rho = np.zeros((spin.dim, spin.dim), dtype=complex)
    for m, w in zip(xs, ws):
        z, south = torus_labels(m, params, n_quad_phi)
        psi = coherent_states(spin, z, south)
        rho += (w / n_quad_phi) * (psi.T @ psi.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def mixed_jz_moments(params: ModelParams, j=None, n_quad_m: int = 128, n_quad_phi: int = 512):
    """``(<Jz>/j, <Jz^2>/j^2)`` of the torus mixture, evaluated on labels only.

    Uses the coherent-state moments ``<Jz> = j n_z`` and
    ``<Jz^2> = j(j - 1/2) n_z^2 + j/2``; ``j=None`` gives the ``j -> inf`` limit.
    """
    xs, ws = _mixture_nodes(params, n_quad_m)
    first = second = 0.0
    for m, w in zip(xs, ws):
        z, south = torus_labels(m, params, n_quad_phi)
        nz = bloch_vectors(z, south)[:, 2]
        first += w * nz.mean()
        second += w * (nz**2).mean()
    norm = float(np.sum(ws))
    first, second = first / norm, second / norm
    if j is not None:
        jj = as_spin(j).j
        second = (1 - 0.5 / jj) * second + 0.5 / jj
    return float(first), float(second)


def variance_asymptote(lam: float) -> float:
    """Thermodynamic-limit ``Delta Jz^2 / j^2`` of the mixed steady state for ``lam > 1``."""
    if lam <= 1:
        raise ValueError("the closed form holds for lam > 1; the asymptote is 0 below")
    a = math.sqrt(1 + 2 * lam**2)
    lam2m1 = (lam - 1) * (lam + 1)
    # atanh(sqrt(3)/a) written to stay accurate as a -> sqrt(3)
    at3 = math.log(a + math.sqrt(3)) - 0.5 * math.log(2 * lam2m1)
    ratio = at3 / (math.sqrt(3) * math.atanh(1 / a))
    return lam2m1 * (ratio - 1)


def relaxation_time(lam: float, kappa: float = 1.0) -> float:
    if lam == 1:
        raise Critical("the relaxation time diverges at lam = 1")
    return 1.0 / (math.sqrt(abs(1 - lam**2)) * kappa)
