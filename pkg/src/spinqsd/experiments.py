"""Data pipelines for the order-parameter, flow, trajectory, variance and scaling studies.

Every function returns plain rows (lists of dicts) or small dataclasses so the
CLI can serialize them directly.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .errors import MethodMismatch, SpinQSDError
from .liouvillian import build_liouvillian, observables, spectral_gap, steady_state
from .params import ModelParams
from .qsd import _resolve_threads, dt_max, simulate_ensemble
from .spin import Chart, CoherentLabel, as_spin, bloch_vectors

__all__ = [
    "Observable",
    "Method",
    "SweepSpec",
    "ScalingFit",
    "run_sweep",
    "steady_point",
    "qsd_time_average",
    "blocked_stderr",
    "flow_portrait",
    "FlowPortrait",
    "sample_trajectory",
    "SampleTrajectory",
    "torus_m",
    "beta_estimate",
    "log_grid",
    "fit_loglog",
    "finite_size_scaling",
]

log = logging.getLogger(__name__)


class Observable(enum.Enum):
    MEAN_JZ = "mean_jz"
    VAR_JZ = "var_jz"


class Method(enum.Enum):
    EXACT = "exact"
    QSD = "qsd"


@dataclass(frozen=True)
class SweepSpec:
    j_list: tuple
    lambda_grid: tuple
    observable: Observable = Observable.MEAN_JZ
    method: Method = Method.EXACT

    def __post_init__(self):
        js = tuple(as_spin(j) for j in self.j_list)
        lams = tuple(float(x) for x in self.lambda_grid)
        if not js or not lams:
            raise ValueError("sweep grids must be non-empty")
        if any(b.two_j <= a.two_j for a, b in zip(js, js[1:])):
            raise ValueError("j_list must be strictly increasing")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambda_grid must be strictly increasing")
        object.__setattr__(self, "j_list", js)
        object.__setattr__(self, "lambda_grid", lams)
        object.__setattr__(self, "observable", Observable(self.observable))
        object.__setattr__(self, "method", Method(self.method))


def _asymptote(observable: Observable, lam: float) -> float:
    if observable is Observable.MEAN_JZ:
        return analytic.jz_asymptote(lam)
    return analytic.variance_asymptote(lam) if lam > 1 else 0.0


def steady_point(params: ModelParams, gap: bool = False) -> dict:
    """Exact steady-state observables normalized by ``j`` (and ``j**2`` for the variance)."""
    L = build_liouvillian(params)
    rho, info = steady_state(L, return_info=True)
    obs = observables(rho, L.ops)
    j = params.j.j
    out = {
        "mean_jz_over_j": obs["mean_jz"] / j,
        "var_jz_over_j2": obs["var_jz"] / j**2,
        "purity": obs["purity"],
        "residual": info["residual"],
    }
    if gap:
        out["spectral_gap"] = spectral_gap(L)
    return out


def blocked_stderr(series, block_len: int) -> float:
    """Standard error of the mean of a correlated series from non-overlapping block means."""
    series = np.asarray(series, dtype=float)
    n_blocks = len(series) // max(1, int(block_len))
    if n_blocks < 2:
        raise ValueError("need at least two blocks")
    blocks = series[: n_blocks * block_len].reshape(n_blocks, block_len).mean(axis=1)
    return float(blocks.std(ddof=1) / math.sqrt(n_blocks))


def _critical_time(params: ModelParams) -> float:
    """Slowest deterministic relaxation scale, capped at the finite-size scale ``j**(1/3)/kappa``."""
    cap = params.j.j ** (1 / 3) / params.kappa
    lam = params.lam
    if lam == 1:
        return cap
    return min(analytic.relaxation_time(lam, params.kappa), cap)


def _qsd_start(params: ModelParams):
    if params.omega == 0:
        return 0j
    thermo = ModelParams(None, params.omega, params.kappa)
    if params.lam <= 1:
        return analytic.fixed_points(thermo).mu_minus
    return -1j * params.kappa / params.omega


def qsd_time_average(params: ModelParams, n_traj: int = 500, dt: float | None = None,
                     t_burn: float | None = None, t_avg: float | None = None, seed: int = 0,
                     threads=1, sample_every: float = 1.0) -> dict:
    """Long-time average of ``<Jz>/j`` and ``Delta Jz^2/j^2`` over an ensemble.

    Burn-in defaults to ``10 max(xi, 0.1 j/kappa)``. Each trajectory's time
    average is one independent sample, so the standard error is taken across
    trajectories; with a single trajectory it falls back to block averaging.
    """
    j = params.j.j
    if t_burn is None:
        t_burn = 10 * max(_critical_time(params), 0.1 * j / params.kappa)
    if t_avg is None:
        t_avg = t_burn
        if params.lam > 1 and params.omega_z == 0:
            try:
                t_avg = max(t_avg, 20 * analytic.torus_period(params))
            except SpinQSDError:
                pass
    if dt is None:
        dt = min(5e-3 / params.kappa, dt_max(params))
    sample_times = np.arange(0.0, t_burn + t_avg + 0.5 * sample_every, sample_every)
    res = simulate_ensemble(params, n_traj, sample_times[-1], dt=dt, sample_times=sample_times,
                            initial=_qsd_start(params), base_seed=seed, threads=threads)
    keep = res.times >= t_burn
    nz = res.bloch()[keep, :, 2]
    # coherent-state moments: <Jz^2>/j^2 = (1 - 1/2j) n_z^2 + 1/2j
    second = (1 - 0.5 / j) * nz**2 + 0.5 / j
    mean_traj = nz.mean(axis=0)
    second_traj = second.mean(axis=0)
    mean = float(mean_traj.mean())
    var = float(second_traj.mean() - mean**2)
    if n_traj > 1:
        se = float(mean_traj.std(ddof=1) / math.sqrt(n_traj))
        # delta method on var = E[s] - E[n]^2
        g = second_traj - 2 * mean * mean_traj
        se_var = float(g.std(ddof=1) / math.sqrt(n_traj))
    else:
        block = max(2, int(round(10 * _block_time(params) / sample_every)))
        se = blocked_stderr(nz[:, 0], block)
        se_var = blocked_stderr(second[:, 0] - 2 * mean * nz[:, 0], block)
    return {"mean_jz_over_j": mean, "mean_stderr": se, "var_jz_over_j2": var, "var_stderr": se_var,
            "t_burn": t_burn, "t_avg": t_avg, "dt": dt, "n_traj": n_traj, "seed": seed}


def _block_time(params):
    if params.lam > 1:
        try:
            return analytic.torus_period(params)
        except SpinQSDError:
            pass
    return _critical_time(params)


def run_sweep(spec: SweepSpec, kappa: float = 1.0, omega_z: float = 0.0, seed: int = 0,
              n_traj: int = 200, threads=1) -> list[dict]:
    """Evaluate the observable on the ``(j, lambda)`` grid.

    Grid points are independent; failures are recorded in the ``status`` column
    and the sweep continues. Rows come back in grid order.
    """
    key = "mean_jz_over_j" if spec.observable is Observable.MEAN_JZ else "var_jz_over_j2"
    se_key = "mean_stderr" if spec.observable is Observable.MEAN_JZ else "var_stderr"
    points = [(j, lam) for j in spec.j_list for lam in spec.lambda_grid]

    def work(point):
        j, lam = point
        params = ModelParams.from_lambda(j, lam, kappa, omega_z)
        row = {"j": j.j, "lambda": lam, "method": spec.method.value,
               "seed": seed if spec.method is Method.QSD else None}
        try:
            if spec.method is Method.EXACT:
                res = steady_point(params)
                row.update(value=res[key], stderr=0.0)
            else:
                res = qsd_time_average(params, n_traj=n_traj, seed=seed)
                row.update(value=res[key], stderr=res[se_key])
            row["status"] = "ok"
        except Exception as exc:  # noqa: BLE001 - recorded per point
            log.warning("sweep point j=%s lambda=%s failed: %s", j, lam, exc)
            row.update(value=math.nan, stderr=math.nan, status=f"error: {exc}")
        row["asymptote"] = _asymptote(spec.observable, lam)
        return row

    n_threads = min(_resolve_threads(threads), len(points))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            return list(pool.map(work, points))
    return [work(p) for p in points]


@dataclass
class FlowPortrait:
    params: ModelParams
    times: np.ndarray
    tracks: np.ndarray = field(repr=False)  # (n_init, n_times, 3)

    def rows(self):
        for k, track in enumerate(self.tracks):
            for t, n in zip(self.times, track):
                yield {"lambda": self.params.lam, "track_id": k, "t": t, "nx": n[0], "ny": n[1], "nz": n[2]}


def flow_portrait(params: ModelParams, n_init: int = 8, t_final: float | None = None,
                  n_samples: int = 400, dt: float = 1e-3) -> FlowPortrait:
    """Noiseless flow from ``n_init`` equally spaced equator labels.

    Default duration: one period for closed orbits, otherwise 40 relaxation times.
    """
    starts = np.exp(2j * np.pi * (np.arange(n_init) + 0.5) / n_init)
    lam = params.lam_flow
    if t_final is None:
        if lam > 1:
            t_final = analytic.torus_period(params)
        else:
            t_final = 40 / (params.kappa_tilde * math.sqrt(1 - lam**2)) if lam < 1 else 200 / params.kappa
    times = np.linspace(0.0, t_final, n_samples)
    z, south = analytic.integrate_deterministic(starts, params, times, dt=dt)
    tracks = np.transpose(bloch_vectors(z, south), (1, 0, 2))
    return FlowPortrait(params, times, tracks)


def torus_m(z, south, params: ModelParams) -> np.ndarray:
    """Torus label of arrays of chart coordinates."""
    fp = analytic.fixed_points(params)
    z = np.asarray(z, dtype=complex)
    p = np.where(south, 1 - fp.mu_plus * z, z - fp.mu_plus)
    q = np.where(south, 1 - fp.mu_minus * z, z - fp.mu_minus)
    ap, aq = np.abs(p) ** 2, np.abs(q) ** 2
    return (ap - aq) / (ap + aq)


@dataclass
class SampleTrajectory:
    params: ModelParams
    seed: int
    times: np.ndarray
    z: np.ndarray
    south: np.ndarray
    bloch: np.ndarray = field(repr=False)
    m: np.ndarray | None = field(default=None, repr=False)

    def final_label(self) -> CoherentLabel:
        return CoherentLabel(self.z[-1], Chart.SOUTH if self.south[-1] else Chart.NORTH)

    def rows(self):
        for k, t in enumerate(self.times):
            yield {"t": t, "nx": self.bloch[k, 0], "ny": self.bloch[k, 1], "nz": self.bloch[k, 2],
                   "m": math.nan if self.m is None else self.m[k]}


def sample_trajectory(params: ModelParams, start="mu_plus", t_final: float = 100.0, seed: int = 0,
                      dt: float | None = None, sample_every: float = 0.5) -> SampleTrajectory:
    """One noisy trajectory, with its torus-label series attached when orbits are closed.

    ``start`` is ``"mu_plus"``, ``"mu_minus"`` or a custom label.
    """
    if isinstance(start, str):
        fp = analytic.fixed_points(params)
        start = {"mu_plus": fp.mu_plus, "mu_minus": fp.mu_minus}[start.lower()]
    if dt is None:
        dt = min(1e-2 / params.kappa, dt_max(params))
    times = np.arange(0.0, t_final + 0.5 * sample_every, sample_every)
    res = simulate_ensemble(params, 1, times[-1], dt=dt, sample_times=times, initial=start, base_seed=seed)
    z, south = res.z[:, 0], res.south[:, 0]
    m = torus_m(z, south, params) if params.lam_flow > 1 and params.omega_z == 0 else None
    return SampleTrajectory(params, seed, res.times, z, south, bloch_vectors(z, south), m)


def log_grid(lo: float, hi: float, per_decade: int = 8) -> np.ndarray:
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def beta_estimate(curve, eps_grid, per_decade: int = 8) -> np.ndarray:
    """Local power-law exponent ``d ln f / d ln eps``.

    ``curve`` is either a callable ``lam -> f`` evaluated at ``lam = 1 + eps``
    with a central stencil one grid step wide in ``ln eps``, or a pair
    ``(eps, values)`` of tabulated data differentiated on its own grid (end
    points one-sided).
    """
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    if callable(curve):
        h = math.log(10) / per_decade
        up = np.array([curve(1 + e * math.exp(h)) for e in eps], dtype=float)
        down = np.array([curve(1 + e * math.exp(-h)) for e in eps], dtype=float)
        if np.any(up <= 0) or np.any(down <= 0):
            raise ValueError("curve values must be positive")
        return (np.log(up) - np.log(down)) / (2 * h)
    xs, values = (np.asarray(a, dtype=float) for a in curve)
    if np.any(values <= 0):
        raise ValueError("curve values must be positive")
    beta = np.gradient(np.log(values), np.log(xs))
    return np.interp(np.log(eps), np.log(xs), beta)


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    points: list
    table: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self.points) < 4:
            raise ValueError("a scaling fit needs at least four points")


def fit_loglog(js, values) -> ScalingFit:
    x = np.log(np.asarray(js, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return ScalingFit(float(slope), float(intercept), r2, list(zip(x.tolist(), y.tolist())))


def finite_size_scaling(j_exact, j_qsd=(), lam: float = 1.0, kappa: float = 1.0, n_traj: int = 500,
                        seed: int = 0, dt: float | None = None, threads=1, overlap_sigma: float = 3.0) -> ScalingFit:
    """Log-log fit of the steady-state ``<Jz>/j`` against ``j``.

    Exact steady states cover ``j_exact`` and ensemble time averages ``j_qsd``.
    On shared ``j`` values the two must agree within ``overlap_sigma`` standard
    errors (``MethodMismatch`` otherwise); the fit uses the exact value there.
    """
    j_exact = [as_spin(j) for j in j_exact]
    j_qsd = [as_spin(j) for j in j_qsd]
    shared = sorted({j.two_j for j in j_exact} & {j.two_j for j in j_qsd})
    if j_qsd and j_exact and len(shared) < 2:
        raise MethodMismatch("exact and stochastic methods must share at least two j values")
    all_two_j = [j.two_j for j in j_exact + j_qsd]
    if max(all_two_j) / min(all_two_j) < 10**1.5:
        raise ValueError("system sizes must span at least 1.5 decades")
    table = []
    exact = {}
    for j in j_exact:
        val = steady_point(ModelParams.from_lambda(j, lam, kappa))["mean_jz_over_j"]
        exact[j.two_j] = val
        table.append({"j": j.j, "mean_jz_over_j": val, "method": "exact", "stderr": 0.0})
    stochastic = {}
    for j in j_qsd:
        res = qsd_time_average(ModelParams.from_lambda(j, lam, kappa), n_traj=n_traj, seed=seed,
                               dt=dt, threads=threads)
        stochastic[j.two_j] = res
        table.append({"j": j.j, "mean_jz_over_j": res["mean_jz_over_j"], "method": "qsd",
                      "stderr": res["mean_stderr"]})
    if j_qsd and j_exact:
        for tj in shared:
            diff = abs(exact[tj] - stochastic[tj]["mean_jz_over_j"])
            if diff > overlap_sigma * stochastic[tj]["mean_stderr"]:
                raise MethodMismatch(
                    f"j={tj / 2}: exact {exact[tj]:.6g} vs qsd {stochastic[tj]['mean_jz_over_j']:.6g} "
                    f"+- {stochastic[tj]['mean_stderr']:.2g}"
                )
    merged = {**{k: v["mean_jz_over_j"] for k, v in stochastic.items()}, **exact}
    two_js = sorted(merged)
    fit = fit_loglog([t / 2 for t in two_js], [merged[t] for t in two_js])
    fit.table = sorted(table, key=lambda r: (r["j"], r["method"]))
    return fit
