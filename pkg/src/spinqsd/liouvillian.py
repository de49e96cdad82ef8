"""Exact finite-j master equation: generator, time evolution and steady state.

Density matrices are vectorized column-major (``rho.ravel(order="F")``), so
``A rho B`` corresponds to ``kron(B.T, A) @ vec(rho)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AmbiguousNull, IntegrationError, MemoryBudgetExceeded, NonConvergence
from .params import ModelParams
from .spin import SpinOperators, build_operators

__all__ = [
    "Liouvillian",
    "build_liouvillian",
    "dense_rhs",
    "evolve",
    "steady_state",
    "low_lying_spectrum",
    "spectral_gap",
    "observables",
    "mirror_rho",
    "mirror_unitary",
    "trace_distance",
    "vec",
    "unvec",
    "DEFAULT_MAX_DIM2",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_DIM2 = 1_100_000
DENSE_BELOW_DIM2 = 4096


def vec(rho):
    return np.asarray(rho).ravel(order="F")


def unvec(v, dim):
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Liouvillian:
    """Sparse GKSL generator acting on column-major vectorized density matrices."""

    mat: sp.csr_matrix = field(repr=False)
    params: ModelParams
    ops: SpinOperators = field(repr=False)

    @property
    def dim(self) -> int:
        return self.ops.dim

    @property
    def _op(self):
        # dense matvec is faster for small generators
        if self.dim**2 < DENSE_BELOW_DIM2:
            cached = self.__dict__.get("_dense")
            if cached is None:
                cached = self.mat.toarray()
                object.__setattr__(self, "_dense", cached)
            return cached
        return self.mat

    def apply(self, rho) -> np.ndarray:
        """``L(rho)`` as a matrix."""
        return unvec(self._op @ vec(rho), self.dim)

    def matvec(self, v) -> np.ndarray:
        return self._op @ v


def _spre(a, eye):
    return sp.kron(eye, a, format="csr")


def _spost(a, eye):
    return sp.kron(a.T, eye, format="csr")


def build_liouvillian(params: ModelParams, max_dim2: int = DEFAULT_MAX_DIM2) -> Liouvillian:
    """Assemble the generator

        L rho = -i[omega Jx + omega_z Jz, rho] + (kappa/j) D[J+] rho + (kappa/j) D[Jz] rho

    with ``D[c] rho = c rho c^+ - {c^+ c, rho}/2``.
    """
    if params.j is None:
        raise ValueError("the master equation needs a finite spin length")
    dim = params.j.dim
    if dim * dim > max_dim2:
        raise MemoryBudgetExceeded(
            f"Liouvillian dimension {dim * dim} exceeds the budget of {max_dim2}"
        )
    ops = build_operators(params.j)
    eye = sp.identity(dim, dtype=complex, format="csr")
    jp = sp.csr_matrix(ops.jplus)
    jz = sp.csr_matrix(ops.jz)
    ham = params.omega * sp.csr_matrix(ops.jx) + params.omega_z * jz

    mat = -1j * (_spre(ham, eye) - _spost(ham, eye))
    rate = params.kappa / params.j.j
    for c in (jp, jz):
        cdc = (c.conj().T @ c).tocsr()
        mat = mat + rate * (
            sp.kron(c.conj(), c, format="csr") - 0.5 * _spre(cdc, eye) - 0.5 * _spost(cdc, eye)
        )
    mat = sp.csr_matrix(mat)
    mat.eliminate_zeros()
    return Liouvillian(mat, params, ops)


def dense_rhs(params: ModelParams, rho, ops: SpinOperators | None = None) -> np.ndarray:
    """Term-by-term dense evaluation of the master equation right-hand side."""
    ops = ops or build_operators(params.j)
    rho = np.asarray(rho, dtype=complex)
    ham = params.omega * ops.jx + params.omega_z * ops.jz
    out = -1j * (ham @ rho - rho @ ham)
    rate = params.kappa / params.j.j
    for c in (ops.jplus, ops.jz):
        cd = c.conj().T
        out += rate * (c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c))
    return out


# ---------------------------------------------------------------------------
# density matrix helpers


def hermitize(rho):
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    return rho / np.asarray(tr)[..., None, None]


def trace_distance(a, b) -> float:
    """``||a - b||_1 / 2`` for Hermitian matrices."""
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def observables(rho, ops: SpinOperators | None = None) -> dict:
    rho = np.asarray(rho)
    if ops is None:
        ops = build_operators((rho.shape[0] - 1) / 2)
    m = np.real(np.diag(ops.jz))
    pops = np.real(np.diag(rho))
    mean_jz = float(pops @ m)
    return {
        "mean_jz": mean_jz,
        "var_jz": float(pops @ m**2 - mean_jz**2),
        "mean_jx": float(np.real(np.sum(ops.jx * rho.T))),
        "mean_jy": float(np.real(np.sum(ops.jy * rho.T))),
        "purity": float(np.real(np.sum(rho * rho.T))),
    }


def mirror_unitary(dim: int) -> np.ndarray:
    """Diagonal of ``exp(-i pi Jz)`` in descending-m order."""
    j = (dim - 1) / 2
    m = j - np.arange(dim)
    return np.exp(-1j * np.pi * m)


def mirror_rho(rho) -> np.ndarray:
    """Antiunitary reflection ``Jx -> -Jx`` combined with complex conjugation."""
    rho = np.asarray(rho)
    u = mirror_unitary(rho.shape[-1])
    return u[:, None] * np.conj(rho) * np.conj(u)[None, :]


# ---------------------------------------------------------------------------
# time evolution


def _default_dt(L: Liouvillian) -> float:
    p = L.params
    dt = 1e-2 / p.kappa
    if p.omega > 0:
        dt = min(dt, 1e-2 / p.omega)
    gersh = float(np.max(np.asarray(abs(L.mat).sum(axis=1)).ravel()))
    if gersh > 0:
        # RK4 is stable for |h * lambda| below ~2.78 on the negative real axis
        dt = min(dt, 2.5 / gersh)
    return dt


def _rk4_step(op, v, h):
    k1 = op @ v
    k2 = op @ (v + 0.5 * h * k1)
    k3 = op @ (v + 0.5 * h * k2)
    k4 = op @ (v + h * k3)
    return v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(L: Liouvillian, rho0, t_final: float, dt: float | None = None, sample_times=None,
           trace_tol: float = 1e-10, max_halvings: int = 12):
    """Integrate ``d rho/dt = L rho`` with classical RK4.

    Returns ``(times, rhos)`` where ``rhos[k]`` is the state at ``times[k]``.
    Output samples are hermitized and trace-normalized; the internal state is not.
    """
    dim = L.dim
    if sample_times is None:
        sample_times = np.array([0.0, t_final])
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) < 0) or sample_times[0] < 0 or sample_times[-1] > t_final + 1e-12:
        raise ValueError("sample_times must be sorted and lie in [0, t_final]")
    if dt is None:
        dt = _default_dt(L)
    if dt <= 0:
        raise ValueError("dt must be positive")

    op = L._op
    ones = vec(np.eye(dim))
    v = vec(np.asarray(rho0, dtype=complex)).copy()
    t = 0.0
    out = np.empty((len(sample_times), dim, dim), dtype=complex)
    for i, ts in enumerate(sample_times):
        while t < ts - 1e-14:
            h = min(dt, ts - t)
            tr_old = ones @ v
            for _ in range(max_halvings + 1):
                v_new = _rk4_step(op, v, h)
                if abs(ones @ v_new - tr_old) <= trace_tol:
                    break
                h *= 0.5
                dt = h
            else:
                raise IntegrationError(f"trace drift per step above {trace_tol} at t={t:.6g}")
            v = v_new
            t += h
        out[i] = hermitize(unvec(v, dim))
    return sample_times, out


# ---------------------------------------------------------------------------
# steady state


def _lu(L: Liouvillian, shift: float):
    n = L.mat.shape[0]
    a = (L.mat - shift * sp.identity(n, dtype=complex, format="csr")).tocsc()
    return spla.splu(a)


def _residual(L: Liouvillian, v) -> float:
    return float(np.linalg.norm(L.mat @ v) / np.linalg.norm(v))


def steady_state(L: Liouvillian, tol: float = 1e-10, max_iter: int = 50, check_unique: bool = True,
                 ambiguity_tol: float = 1e-9, return_info: bool = False):
    """Unique stationary state from the null space of ``L``.

    Inverse iteration on ``L - sigma`` with ``sigma = 1e-8 kappa``, started from
    the maximally mixed state. If the residual stalls, a shift-invert Arnoldi
    eigenpair is used instead. With ``check_unique`` the second eigenvalue
    closest to zero is computed and ``AmbiguousNull`` raised when it is below
    ``ambiguity_tol * kappa`` in magnitude.
    """
    dim = L.dim
    kappa = L.params.kappa
    shift = 1e-8 * kappa
    try:
        lu = _lu(L, shift)
    except RuntimeError as exc:
        raise NonConvergence(f"sparse LU factorization failed: {exc}") from exc

    v = vec(np.eye(dim, dtype=complex) / dim)
    residuals = []
    for _ in range(max_iter):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        residuals.append(_residual(L, v))
        if residuals[-1] <= tol:
            break
        if len(residuals) > 4 and residuals[-1] > 0.5 * residuals[-4]:
            break
    stage = "inverse iteration"
    if residuals[-1] > tol:
        log.info("inverse iteration stalled at residual %.3g, falling back to Arnoldi", residuals[-1])
        stage = "shift-invert Arnoldi"
        try:
            _, vecs = spla.eigs(L.mat.tocsc(), k=1, sigma=0.0, which="LM", v0=v, tol=1e-14)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            raise NonConvergence(f"{stage} failed: {exc}") from exc
        v = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
        residuals.append(_residual(L, v))
        if residuals[-1] > tol:
            raise NonConvergence(f"{stage} residual {residuals[-1]:.3g} above tolerance {tol:.1g}")

    rho = hermitize(unvec(v, dim))
    info = {"stage": stage, "iterations": len(residuals), "residual": _residual(L, vec(rho))}

    if check_unique:
        eigvals = low_lying_spectrum(L, k=2, lu=lu, shift=shift)
        second = eigvals[1]
        info["second_eigenvalue"] = complex(second)
        if abs(second) < ambiguity_tol * kappa:
            raise AmbiguousNull(
                f"second eigenvalue {second:.3g} is numerically zero; steady state is not resolved"
            )
    if return_info:
        return rho, info
    return rho


def low_lying_spectrum(L: Liouvillian, k: int = 6, lu=None, shift: float | None = None) -> np.ndarray:
    """The ``k`` eigenvalues of ``L`` closest to zero, sorted by magnitude."""
    n = L.mat.shape[0]
    if n <= 400:
        ev = np.linalg.eigvals(L.mat.toarray())
        return ev[np.argsort(np.abs(ev))][:k]
    if shift is None:
        shift = 1e-8 * L.params.kappa
    if lu is None:
        lu = _lu(L, shift)
    opinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=complex)
    theta = spla.eigs(opinv, k=min(k, n - 2), which="LM", tol=1e-10, return_eigenvectors=False)
    ev = shift + 1.0 / theta
    return ev[np.argsort(np.abs(ev))]


def spectral_gap(L: Liouvillian, k: int = 6) -> float:
    """Smallest decay rate ``-Re(lambda)`` among the low-lying non-stationary modes."""
    ev = low_lying_spectrum(L, k=k)
    return float(np.min(-ev[1:].real))
