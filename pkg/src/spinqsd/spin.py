"""Spin-j representation in the Dicke basis and spin coherent states.

Basis vectors are ordered by descending magnetic quantum number,
``|j, j>, |j, j-1>, ..., |j, -j>``, so the north pole ``mu = 0`` is index 0.

A coherent state is labelled by a complex number ``mu`` via

    |mu>> = exp(mu J_-) |j, j>,     |mu> = |mu>> / sqrt(<<mu|mu>>),

which puts the amplitude ``mu**k * sqrt(binom(2j, k))`` on ``|j, j-k>``.
Near the south pole the label is stored in the second chart ``nu = 1/mu``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SpinQuantum",
    "SpinOperators",
    "Chart",
    "CoherentLabel",
    "build_operators",
    "coherent_state",
    "coherent_states",
    "bloch_vector",
    "bloch_vectors",
    "mirror_label",
    "LOG_BINOMIAL_THRESHOLD",
]

# above this value of 2j binomials are evaluated in the log domain
LOG_BINOMIAL_THRESHOLD = 60


@dataclass(frozen=True)
class SpinQuantum:
    """Spin length ``j``, stored as the integer ``2j``."""

    two_j: int

    def __post_init__(self):
        if int(self.two_j) != self.two_j or self.two_j < 0:
            raise ValueError(f"two_j must be a non-negative integer, got {self.two_j!r}")
        object.__setattr__(self, "two_j", int(self.two_j))

    @classmethod
    def from_j(cls, j) -> "SpinQuantum":
        """Build from ``j`` given as int, float or string such as ``"5/2"``."""
        two_j = Fraction(j) * 2
        if two_j.denominator != 1:
            raise ValueError(f"j must be a multiple of 1/2, got {j!r}")
        return cls(int(two_j))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def m(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (descending)."""
        return self.j - np.arange(self.dim)

    def __str__(self):
        return str(self.two_j // 2) if self.two_j % 2 == 0 else f"{self.two_j}/2"


def as_spin(j) -> SpinQuantum:
    if isinstance(j, SpinQuantum):
        return j
    return SpinQuantum.from_j(j)


@dataclass(frozen=True)
class SpinOperators:
    """Dense spin matrices for one multiplet.

    ``jplus`` carries ``sqrt(j(j+1) - m(m+1))`` on the superdiagonal, which in
    descending-m order moves ``|j, m>`` to ``|j, m+1>``.
    """

    spin: SpinQuantum
    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    jz: np.ndarray = field(repr=False)
    jplus: np.ndarray = field(repr=False)
    jminus: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spin.dim

    @cached_property
    def ladder(self) -> np.ndarray:
        """Superdiagonal of ``jplus`` as a real vector of length ``dim - 1``."""
        return np.real(np.diag(self.jplus, 1)).copy()


def build_operators(j) -> SpinOperators:
    spin = as_spin(j)
    m = spin.m
    # <m+1|J+|m> for m = m[1:], i.e. entry (k-1, k)
    ladder = np.sqrt(spin.j * (spin.j + 1) - m[1:] * (m[1:] + 1))
    jplus = np.diag(ladder, 1).astype(complex)
    jminus = jplus.conj().T.copy()
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    jz = np.diag(m).astype(complex)
    for a in (jx, jy, jz, jplus, jminus):
        a.setflags(write=False)
    return SpinOperators(spin, jx, jy, jz, jplus, jminus)


class Chart(enum.Enum):
    NORTH = "north"
    SOUTH = "south"


@dataclass(frozen=True)
class CoherentLabel:
    """Label of a spin coherent state in one of two stereographic charts.

    ``z`` is ``mu`` in the north chart and ``nu = 1/mu`` in the south chart.
    """

    z: complex
    chart: Chart = Chart.NORTH

    def __post_init__(self):
        z = complex(self.z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"coherent label must be finite in its chart, got {z!r}")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_mu(cls, mu) -> "CoherentLabel":
        """Label for ``mu``, using the south chart when ``|mu| > 1`` (``mu = inf`` allowed)."""
        mu = complex(mu)
        if not math.isfinite(abs(mu)):
            return cls(0j, Chart.SOUTH)
        if abs(mu) > 1:
            return cls(1 / mu, Chart.SOUTH)
        return cls(mu, Chart.NORTH)

    @classmethod
    def south_pole(cls) -> "CoherentLabel":
        return cls(0j, Chart.SOUTH)

    @property
    def is_south(self) -> bool:
        return self.chart is Chart.SOUTH

    @property
    def mu(self) -> complex:
        """North-chart value (complex infinity at the south pole)."""
        if not self.is_south:
            return self.z
        if self.z == 0:
            return complex(math.inf, 0)
        return 1 / self.z

    def to_chart(self, chart: Chart) -> "CoherentLabel":
        if chart is self.chart:
            return self
        if self.z == 0:
            raise ZeroDivisionError("pole has no finite coordinate in the opposite chart")
        return CoherentLabel(1 / self.z, chart)


def _log_binom(two_j: int) -> np.ndarray:
    k = np.arange(two_j + 1)
    return gammaln(two_j + 1) - gammaln(k + 1) - gammaln(two_j - k + 1)


def _amplitudes(two_j: int, z: np.ndarray) -> np.ndarray:
    """Normalized coherent amplitudes ``z**k sqrt(binom(2j,k))``, k = 0..2j, for each z."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    k = np.arange(two_j + 1)
    if two_j <= LOG_BINOMIAL_THRESHOLD:
        coeff = np.sqrt(np.array([math.comb(two_j, int(i)) for i in k], dtype=float))
        amps = coeff * z[:, None] ** k
        norm = (1.0 + np.abs(z) ** 2) ** (two_j / 2)
        amps = amps / norm[:, None]
    else:
        half_log_binom = 0.5 * _log_binom(two_j)
        r = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_r = np.log(r)
            logmag = np.where(k[None, :] == 0, 0.0, k[None, :] * log_r[:, None]) + half_log_binom
        logmag -= 0.5 * two_j * np.log1p(r**2)[:, None]
        amps = np.exp(logmag) * np.exp(1j * np.outer(np.angle(z), k))
    norms = np.linalg.norm(amps, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise FloatingPointError("coherent state normalization under/overflowed")
    return amps / norms[:, None]


def coherent_states(j, z, south=None) -> np.ndarray:
    """Coherent state vectors for an array of labels, shape ``(n, dim)``.

    ``south`` marks entries whose ``z`` is a south-chart coordinate; those are
    expanded around ``|j, -j>`` with real positive amplitude there.
    """
    spin = as_spin(j)
    z = np.asarray(z, dtype=complex).reshape(-1)
    amps = _amplitudes(spin.two_j, z)
    if south is not None:
        south = np.broadcast_to(np.asarray(south, dtype=bool), z.shape)
        amps[south] = amps[south, ::-1]
    return amps


def coherent_state(j, label) -> np.ndarray:
    """Unit-norm coherent state ``|mu>`` in the Dicke basis."""
    if not isinstance(label, CoherentLabel):
        label = CoherentLabel(label)
    return coherent_states(j, [label.z], [label.is_south])[0]


def bloch_vectors(z, south=None) -> np.ndarray:
    """Unit Bloch vectors for arrays of chart coordinates, shape ``(..., 3)``."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    denom = 1.0 + r2
    nx = 2 * z.real / denom
    ny = 2 * z.imag / denom
    nz = (1.0 - r2) / denom
    if south is not None:
        south = np.broadcast_to(np.asarray(south, dtype=bool), z.shape)
        ny = np.where(south, -ny, ny)
        nz = np.where(south, -nz, nz)
    return np.stack([nx, ny, nz], axis=-1)


def bloch_vector(label) -> np.ndarray:
    """Point on the unit sphere, ``<mu|J|mu> / j``; independent of j."""
    if not isinstance(label, CoherentLabel):
        label = CoherentLabel.from_mu(label)
    return bloch_vectors(label.z, label.is_south)


def mirror_label(label):
    """Label of the mirror image ``mu -> -conj(mu)``; same rule in both charts."""
    if isinstance(label, CoherentLabel):
        return CoherentLabel(-label.z.conjugate(), label.chart)
    return -np.conj(label)
