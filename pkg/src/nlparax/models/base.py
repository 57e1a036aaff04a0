"""Shared solver plumbing: coefficients, states, step control, error types."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..fields import Field

__all__ = [
    "ModelCoefficients",
    "ModelKind",
    "ModelState",
    "StepControl",
    "SolverDiverged",
    "SolverNaN",
    "check_health",
]


@dataclass(frozen=True)
class ModelCoefficients:
    """Physical constants shared by every model in the hierarchy."""

    c: float = 1.0
    rho0: float = 1.0
    gamma: float = 1.4
    nu: float = 0.0
    eps: float = 0.01

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if self.rho0 <= 0:
            raise ValueError("rho0 must be > 0")
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        """Local nonlinearity coefficient (gamma - 1)/c**2."""
        return (self.gamma - 1.0) / self.c**2

    @property
    def beta_nl(self) -> float:
        """Cumulative nonlinearity coefficient (always 2)."""
        return 2.0


class ModelKind(Enum):
    KUZNETSOV = "kuznetsov"
    WESTERVELT = "westervelt"
    KZK = "kzk"
    NPE = "npe"


@dataclass(frozen=True)
class ModelState:
    """One model's unknowns at one value of its evolution variable.

    evol is t for Kuznetsov/Westervelt, z for KZK and tau for NPE.  velocity
    holds u_t (or Pi_t) for the second-order models and is absent for the
    one-way models.
    """

    model: ModelKind
    evol: float
    primary: Field
    velocity: Field | None = None

    def __post_init__(self) -> None:
        if self.velocity is not None and self.velocity.grid != self.primary.grid:
            raise ValueError("primary and velocity fields must share one grid")


@dataclass(frozen=True)
class StepControl:
    """Evolution-variable step and output sampling."""

    step: float
    scheme: str = "strang"
    substeps: int = 1

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


class SolverDiverged(RuntimeError):
    """Field norm exceeded 1e6 x the initial norm."""


class SolverNaN(RuntimeError):
    """A non-finite value appeared during stepping."""


def check_health(values: np.ndarray, initial_norm: float, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise SolverNaN(f"non-finite values during {where}")
    norm = float(np.sqrt(np.sum(values**2)))
    if norm > 1e6 * max(initial_norm, 1e-300):
        raise SolverDiverged(
            f"norm {norm:.3e} exceeds 1e6 x initial ({initial_norm:.3e}) during {where}"
        )
