"""Quantum state diffusion on spin coherent states.

Each trajectory is a complex label obeying the Ito equation

    d mu = [-i (omega/2)(1 - mu**2) - kappa_tilde mu + i omega_z mu] dt
           + sqrt(kappa/j) (mu**2 d xi_+ - mu d xi_z)

with complex increments ``d xi = (dW1 + i dW2)/sqrt(2)``. Near the south pole
the label is carried in the chart ``nu = 1/mu``; the map is holomorphic and
``d xi**2 = 0``, so the transformed equation has no Ito correction:

    d nu = [i (omega/2)(nu**2 - 1) + kappa_tilde nu - i omega_z nu] dt
           + sqrt(kappa/j) (nu d xi_z - d xi_+)
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import Blowup
from .liouvillian import dense_rhs
from .params import ModelParams
from .spin import CoherentLabel, Chart, SpinOperators, bloch_vectors, build_operators, coherent_states

__all__ = [
    "CHART_RADIUS",
    "drift",
    "drift_south",
    "dt_max",
    "trajectory_rng",
    "TrajectoryState",
    "step",
    "EnsembleResult",
    "simulate_ensemble",
    "ensemble_density",
    "ConsistencyResult",
    "generator_consistency_check",
]

CHART_RADIUS = 4.0
NOISE_CHUNK = 256
DEFAULT_BATCH = 512


def drift(mu, params: ModelParams):
    """Drift of the north-chart label."""
    mu = np.asarray(mu, dtype=complex)
    out = -0.5j * params.omega * (1 - mu * mu) - params.kappa_tilde * mu
    if params.omega_z:
        out = out + 1j * params.omega_z * mu
    return out


def drift_south(nu, params: ModelParams):
    nu = np.asarray(nu, dtype=complex)
    out = 0.5j * params.omega * (nu * nu - 1) + params.kappa_tilde * nu
    if params.omega_z:
        out = out - 1j * params.omega_z * nu
    return out


def dt_max(params: ModelParams) -> float:
    """Largest admissible Euler-Maruyama step, ``0.1 min(1/kappa_tilde, 1/omega, j/kappa)``."""
    scales = [params.j.j / params.kappa] if params.j is not None else []
    if params.kappa_tilde > 0:
        scales.append(1 / params.kappa_tilde)
    if params.omega > 0:
        scales.append(1 / params.omega)
    return 0.1 * min(scales) if scales else math.inf


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory, keyed by ``(base_seed, index)``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _em_step(z, south, params: ModelParams, dt: float, normals, noise_scale: float = 1.0):
    """One Euler-Maruyama step for arrays of chart coordinates, in place-free form.

    ``normals`` has shape ``(n, 4)``: real and imaginary parts of ``d xi_+`` and ``d xi_z``.
    """
    amp = params.noise * noise_scale * math.sqrt(0.5 * dt)
    dxi_p = amp * (normals[:, 0] + 1j * normals[:, 1])
    dxi_z = amp * (normals[:, 2] + 1j * normals[:, 3])
    north_next = z + drift(z, params) * dt + z * z * dxi_p - z * dxi_z
    south_next = z + drift_south(z, params) * dt + z * dxi_z - dxi_p
    z_new = np.where(south, south_next, north_next)
    flip = np.abs(z_new) > CHART_RADIUS
    if np.any(flip):
        z_new = np.where(flip, 1 / np.where(flip, z_new, 1), z_new)
        south = south ^ flip
    return z_new, south


@dataclass
class TrajectoryState:
    """Current label, time and the trajectory's private random stream."""

    label: CoherentLabel
    time: float
    rng: np.random.Generator = field(repr=False)

    @classmethod
    def start(cls, label, base_seed: int = 0, index: int = 0) -> "TrajectoryState":
        if not isinstance(label, CoherentLabel):
            label = CoherentLabel.from_mu(label)
        return cls(label, 0.0, trajectory_rng(base_seed, index))


def step(state: TrajectoryState, params: ModelParams, dt: float, noise_scale: float = 1.0) -> TrajectoryState:
    """Advance one trajectory by ``dt``; the returned state shares the random stream."""
    if dt > dt_max(params):
        raise ValueError(f"dt={dt} exceeds dt_max={dt_max(params)}")
    normals = state.rng.standard_normal((1, 4))
    z, south = _em_step(
        np.array([state.label.z]), np.array([state.label.is_south]), params, dt, normals, noise_scale
    )
    if not np.isfinite(z[0]):
        raise Blowup("non-finite label", time=state.time + dt)
    chart = Chart.SOUTH if south[0] else Chart.NORTH
    return TrajectoryState(CoherentLabel(z[0], chart), state.time + dt, state.rng)


@dataclass
class EnsembleResult:
    """Labels of an ensemble sampled at ``times``; arrays have shape ``(n_times, n_traj)``."""

    times: np.ndarray
    z: np.ndarray
    south: np.ndarray
    params: ModelParams
    base_seed: int
    dt: float

    @property
    def n_traj(self) -> int:
        return self.z.shape[1]

    def mu(self) -> np.ndarray:
        """North-chart labels (``inf`` at the south pole)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.south, 1 / self.z, self.z)

    def bloch(self) -> np.ndarray:
        return bloch_vectors(self.z, self.south)

    def density(self, k: int = -1) -> np.ndarray:
        return ensemble_density(self.z[k], self.params.j, self.south[k])


def _initial_arrays(initial, n_traj):
    if isinstance(initial, CoherentLabel):
        return np.full(n_traj, initial.z, dtype=complex), np.full(n_traj, initial.is_south)
    if np.ndim(initial) == 0:
        label = CoherentLabel.from_mu(initial)
        return np.full(n_traj, label.z, dtype=complex), np.full(n_traj, label.is_south)
    items = list(initial)
    if len(items) != n_traj:
        raise ValueError(f"got {len(items)} initial labels for {n_traj} trajectories")
    labels = [x if isinstance(x, CoherentLabel) else CoherentLabel.from_mu(x) for x in items]
    return (np.array([lb.z for lb in labels], dtype=complex),
            np.array([lb.is_south for lb in labels], dtype=bool))


def _resolve_threads(threads) -> int:
    env = os.environ.get("SPINQSD_THREADS")
    if env:
        threads = env
    if threads in (None, "auto", 0):
        return os.cpu_count() or 1
    return max(1, int(threads))


def _run_batch(params, z, south, first_index, base_seed, dt, n_steps, sample_steps, noise_scale):
    n = len(z)
    rngs = [trajectory_rng(base_seed, first_index + i) for i in range(n)]
    out_z = np.empty((len(sample_steps), n), dtype=complex)
    out_s = np.empty((len(sample_steps), n), dtype=bool)
    k = 0
    while k < len(sample_steps) and sample_steps[k] == 0:
        out_z[k], out_s[k] = z, south
        k += 1
    done = 0
    while done < n_steps:
        chunk = min(NOISE_CHUNK, n_steps - done)
        normals = np.stack([r.standard_normal((chunk, 4)) for r in rngs], axis=1)
        for c in range(chunk):
            z, south = _em_step(z, south, params, dt, normals[c], noise_scale)
            done += 1
            while k < len(sample_steps) and sample_steps[k] == done:
                out_z[k], out_s[k] = z, south
                k += 1
        bad = ~np.isfinite(z)
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            raise Blowup(
                f"trajectory {first_index + idx} produced a non-finite label by t={done * dt:.6g}",
                trajectory=first_index + idx, time=done * dt,
            )
    return out_z, out_s


def simulate_ensemble(params: ModelParams, n_traj: int, t_final: float, dt: float | None = None,
                      sample_times=None, initial=0j, base_seed: int = 0, threads=1,
                      batch_size: int = DEFAULT_BATCH, noise_scale: float = 1.0) -> EnsembleResult:
    """Integrate ``n_traj`` independent trajectories with Euler-Maruyama.

    Trajectory ``i`` draws its noise from ``trajectory_rng(base_seed, i)``, and
    batches are fixed by ``batch_size``, so results do not depend on ``threads``.
    Sample times are rounded to the step grid. ``noise_scale=0`` switches the
    noise off.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if dt is None:
        dt = min(1e-3 / params.kappa, dt_max(params))
    if dt > dt_max(params) * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds dt_max={dt_max(params)}")
    n_steps = int(round(t_final / dt))
    if sample_times is None:
        sample_times = [0.0, n_steps * dt]
    sample_steps = np.rint(np.asarray(sample_times, dtype=float) / dt).astype(int)
    if np.any(np.diff(sample_steps) < 0) or sample_steps[0] < 0 or sample_steps[-1] > n_steps:
        raise ValueError("sample_times must be sorted and lie in [0, t_final]")

    z0, s0 = _initial_arrays(initial, n_traj)
    starts = list(range(0, n_traj, batch_size))

    def work(start):
        stop = min(start + batch_size, n_traj)
        return _run_batch(params, z0[start:stop], s0[start:stop], start, base_seed, dt,
                          n_steps, sample_steps, noise_scale)

    n_threads = min(_resolve_threads(threads), len(starts))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    z = np.concatenate([p[0] for p in parts], axis=1)
    south = np.concatenate([p[1] for p in parts], axis=1)
    return EnsembleResult(sample_steps * dt, z, south, params, int(base_seed), dt)


def ensemble_density(z, j, south=None) -> np.ndarray:
    """Mean of coherent-state projectors over the given labels."""
    psi = coherent_states(j, z, south)
    return psi.T @ psi.conj() / psi.shape[0]


@dataclass(frozen=True)
class ConsistencyResult:
    estimate: float
    exact: float
    stderr: float

    @property
    def discrepancy(self) -> float:
        """``|estimate - exact|`` in units of the standard error."""
        diff = abs(self.estimate - self.exact)
        if self.stderr == 0:
            return 0.0 if diff <= 1e-12 else math.inf
        return diff / self.stderr


def _expectation(obs, j, z, south, ops: SpinOperators):
    if isinstance(obs, str):
        axis = "xyz".index(obs[-1].lower())
        return j.j * bloch_vectors(z, south)[..., axis]
    psi = coherent_states(j, z, south)
    return np.real(np.einsum("ni,ij,nj->n", psi.conj(), obs, psi))


def generator_consistency_check(params: ModelParams, mu0, observable="jz", dt: float = 1e-5,
                                n_traj: int = 100_000, base_seed: int = 0) -> ConsistencyResult:
    """Compare the one-step SDE estimate of ``d/dt E<A>`` at ``t=0`` with ``Tr(A L(rho0))``.

    ``observable`` is ``"jx"``, ``"jy"``, ``"jz"`` or a matrix. Antithetic noise
    pairs cancel the leading martingale fluctuation, so the standard error does
    not grow as ``dt`` shrinks; each pair is one sample.
    """
    label = mu0 if isinstance(mu0, CoherentLabel) else CoherentLabel.from_mu(mu0)
    ops = build_operators(params.j)
    n_pairs = max(2, n_traj // 2)
    rng = trajectory_rng(base_seed, 0)
    normals = rng.standard_normal((n_pairs, 4))
    z0 = np.full(n_pairs, label.z)
    s0 = np.full(n_pairs, label.is_south)
    f0 = _expectation(observable, params.j, z0[:1], s0[:1], ops)[0]
    samples = []
    for sign in (1.0, -1.0):
        z1, s1 = _em_step(z0, s0, params, dt, sign * normals)
        samples.append((_expectation(observable, params.j, z1, s1, ops) - f0) / dt)
    pair = 0.5 * (samples[0] + samples[1])
    estimate = float(np.mean(pair))
    stderr = float(np.std(pair, ddof=1) / math.sqrt(n_pairs))

    psi = coherent_states(params.j, [label.z], [label.is_south])[0]
    rho0 = np.outer(psi, psi.conj())
    if isinstance(observable, str):
        a = getattr(ops, observable.lower())
    else:
        a = np.asarray(observable)
    exact = float(np.real(np.trace(a @ dense_rhs(params, rho0, ops))))
    return ConsistencyResult(estimate, exact, stderr)
