"""Physical parameters of the driven-damped collective spin."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .spin import SpinQuantum, as_spin

__all__ = ["ModelParams"]


@dataclass(frozen=True)
class ModelParams:
    """Drive ``omega``, damping ``kappa`` and optional field ``omega_z``.

    ``j=None`` denotes the thermodynamic limit, where the rescaled damping
    ``kappa_tilde`` equals ``kappa``. At finite j the label drift of the
    coherent-state unraveling carries ``kappa_tilde = kappa (1 + 1/(2j))``:
    the ``-J_z/2`` left over from ``J_- J_+ + J_z**2 = J**2 - J_z`` adds to
    the ``-kappa mu`` of the nonlinear terms.
    """

    j: SpinQuantum | None
    omega: float
    kappa: float = 1.0
    omega_z: float = 0.0

    def __post_init__(self):
        if self.j is not None:
            object.__setattr__(self, "j", as_spin(self.j))
            if self.j.two_j < 1:
                raise ValueError("spin length must satisfy 2j >= 1")
        for name in ("omega", "kappa", "omega_z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.omega < 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")

    @classmethod
    def from_lambda(cls, j, lam: float, kappa: float = 1.0, omega_z: float = 0.0) -> "ModelParams":
        return cls(j, lam * kappa, kappa, omega_z)

    @property
    def lam(self) -> float:
        """Drive-to-damping ratio ``omega / kappa``."""
        return self.omega / self.kappa

    @property
    def kappa_tilde(self) -> float:
        if self.j is None:
            return self.kappa
        return self.kappa * (1.0 + 1.0 / self.j.two_j)

    @property
    def lam_flow(self) -> float:
        """``omega / kappa_tilde``: the ratio that controls the finite-j deterministic flow."""
        return self.omega / self.kappa_tilde

    @property
    def noise(self) -> float:
        """Noise amplitude ``sqrt(kappa / j)`` of the Langevin equation (0 when j is None)."""
        if self.j is None:
            return 0.0
        return math.sqrt(self.kappa / self.j.j)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "two_j": None if self.j is None else self.j.two_j,
            "omega": self.omega,
            "kappa": self.kappa,
            "omega_z": self.omega_z,
        }
