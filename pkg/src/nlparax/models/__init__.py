"""Time/range integrators for the four acoustic models."""

from .base import (
    ModelCoefficients,
    ModelKind,
    ModelState,
    SolverDiverged,
    SolverNaN,
    StepControl,
)
from .oneway import kzk_step_heuristic, solve_kzk, solve_npe
from .waves import NonlinearitySwitch, solve_kuznetsov, solve_westervelt

__all__ = [
    "ModelCoefficients",
    "ModelKind",
    "ModelState",
    "SolverDiverged",
    "SolverNaN",
    "StepControl",
    "NonlinearitySwitch",
    "solve_kuznetsov",
    "solve_westervelt",
    "solve_kzk",
    "solve_npe",
    "kzk_step_heuristic",
]
