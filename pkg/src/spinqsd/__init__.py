"""Exact and stochastic simulation of a driven, dissipative collective spin."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AmbiguousNull,
    AtFixedPoint,
    Blowup,
    Critical,
    DegenerateDrive,
    IntegrationError,
    MemoryBudgetExceeded,
    MethodMismatch,
    NonConvergence,
    NotCyclic,
    SolverError,
    SpinQSDError,
)
from .params import ModelParams  # noqa: E402
from .spin import Chart, CoherentLabel, SpinQuantum, build_operators, coherent_state  # noqa: E402
