"""Corrector construction, ansatz assembly and the Westervelt transform.

The density expansion around the constant state rho0 reads

  rho = rho0 + eps * first + eps^2 * second

with (first, second) = (rho1, rho2) for Kuznetsov, (I, J) for KZK and
(xi, chi) for NPE.  The KZK potential is Phi = (c^2/rho0) invdtau(I), the NPE
potential Psi = -(c/rho0) invdz(xi).  H is the full (eps-dependent) second
KZK corrector of which J is the eps^0 truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, Grid
from .models.base import ModelCoefficients, ModelKind, ModelState
from .spectral import (
    antideriv_array,
    deriv_array,
    mean_zero_array,
)

__all__ = [
    "CorrectorSet",
    "AnsatzProfile",
    "build_correctors",
    "assemble_ansatz",
    "westervelt_transform",
    "westervelt_initial_data",
]


@dataclass(frozen=True)
class CorrectorSet:
    model: ModelKind
    first: Field
    second: Field
    second_full: Field | None = None
    potential: Field | None = None


@dataclass(frozen=True)
class AnsatzProfile:
    """Paraxial-frame counterpart of a FlowState: density and velocity
    profiles with the eps / sqrt(eps) component scalings already applied."""

    rho: Field
    velocity: Field


class _Ops:
    """Named-axis spectral helpers on the bare value arrays of one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.ax = {a.name: (i, a.points, a.length) for i, a in enumerate(grid.axes)}

    def has(self, name: str) -> bool:
        return name in self.ax

    def d(self, v: np.ndarray, name: str, order: int = 1) -> np.ndarray:
        i, n, L = self.ax[name]
        return deriv_array(v, i, n, L, order)

    def inv(self, v: np.ndarray, name: str) -> np.ndarray:
        i, n, L = self.ax[name]
        return antideriv_array(mean_zero_array(v, i), i, n, L)

    def mean_zero(self, v: np.ndarray, name: str) -> np.ndarray:
        i, _n, _L = self.ax[name]
        return mean_zero_array(v, i)

    def group(self, prefix: str) -> list[str]:
        return [a.name for a in self.grid.axes if a.name.startswith(prefix)]

    def grad_sq(self, v: np.ndarray, prefix: str) -> np.ndarray:
        out = np.zeros_like(v)
        for name in self.group(prefix):
            out += self.d(v, name) ** 2
        return out

    def lap(self, v: np.ndarray, prefix: str) -> np.ndarray:
        out = np.zeros_like(v)
        for name in self.group(prefix):
            out += self.d(v, name, 2)
        return out


def _kzk_dz_phi(ops: _Ops, coeff: ModelCoefficients, phi: np.ndarray) -> np.ndarray:
    """d Phi/dz for a KZK potential without a z axis, via the model equation:
    2c d2Phi/(dtau dz) = (gamma+1)/(2c^2) dtau (dtau Phi)^2
                         + nu/(rho0 c^2) dtau^3 Phi + c^2 Lap_y Phi."""
    c, rho0, nu = coeff.c, coeff.rho0, coeff.nu
    dphi = ops.d(phi, "tau")
    rhs = ((coeff.gamma + 1.0) / (2.0 * c**2) * ops.d(dphi**2, "tau")
           + nu / (rho0 * c**2) * ops.d(phi, "tau", 3)
           + c**2 * ops.lap(phi, "y"))
    return ops.inv(rhs, "tau") / (2.0 * c)


def _npe_dtau_psi(ops: _Ops, coeff: ModelCoefficients, psi: np.ndarray) -> np.ndarray:
    """d Psi/dtau for an NPE potential without a tau axis, via the model
    equation (mean-zero in z by the potential normalization)."""
    c, rho0 = coeff.c, coeff.rho0
    dz = ops.d(psi, "z")
    out = ((coeff.gamma + 1.0) / 4.0 * dz**2
           + coeff.nu / (2.0 * rho0) * ops.d(psi, "z", 2)
           - c / 2.0 * ops.inv(ops.lap(psi, "y"), "z"))
    return ops.mean_zero(out, "z")


def build_correctors(model: ModelKind, coeff: ModelCoefficients,
                     primary: ModelState) -> CorrectorSet:
    """Evaluate the closed-form corrector expressions for one model state.

    Kuznetsov needs (u, u_t) and a physical spatial grid; KZK needs a
    mean-zero I(tau, y); NPE a mean-zero xi(z, y).  Evolution-direction
    derivatives that the formulas reference (dPhi/dz, dPsi/dtau) are taken
    spectrally when the grid carries that axis and otherwise substituted from
    the model equation.
    """
    grid = primary.primary.grid
    ops = _Ops(grid)
    c, rho0, nu, eps = coeff.c, coeff.rho0, coeff.nu, coeff.eps
    c2 = c * c

    if model is ModelKind.KUZNETSOV or model is ModelKind.WESTERVELT:
        u = primary.primary.scalar
        if primary.velocity is not None:
            ut = primary.velocity.scalar
        elif ops.has("t"):
            ut = ops.d(u, "t")
        else:
            raise ValueError("Kuznetsov correctors need u_t (velocity field "
                             "or a grid with a t axis)")
        rho1 = rho0 / c2 * ut
        rho2 = (-rho0 * (coeff.gamma - 2.0) / (2.0 * c2**2) * ut**2
                - rho0 / (2.0 * c2) * ops.grad_sq(u, "x")
                - nu / c2 * ops.lap(u, "x"))
        return CorrectorSet(model, Field(grid, rho1), Field(grid, rho2))

    if model is ModelKind.KZK:
        I = primary.primary.scalar
        phi = c2 / rho0 * ops.inv(I, "tau")
        dphi = ops.d(phi, "tau")
        J = (-rho0 * (coeff.gamma - 1.0) / (2.0 * c2**2) * dphi**2
             - nu / c2**2 * ops.d(phi, "tau", 2))
        dzphi = ops.d(phi, "z") if ops.has("z") else _kzk_dz_phi(ops, coeff, phi)
        H = (J
             + eps * (-rho0 / (2.0 * c2)
                      * (ops.grad_sq(phi, "y") - 2.0 / c * dzphi * dphi)
                      - nu / c2 * (ops.lap(phi, "y")
                                   - 2.0 / c * ops.d(dzphi, "tau")))
             + eps**2 * (-rho0 / (2.0 * c2) * dzphi**2
                         - nu / c2 * (ops.d(dzphi, "z") if ops.has("z")
                                      else np.zeros_like(phi))))
        if not ops.has("z"):
            # without a z axis the eps^2 viscous dz^2 Phi term is dropped;
            # experiments default to J anyway
            pass
        return CorrectorSet(model, Field(grid, I.copy()), Field(grid, J),
                            Field(grid, H), Field(grid, phi))

    if model is ModelKind.NPE:
        xi = primary.primary.scalar
        psi = -c / rho0 * ops.inv(xi, "z")
        dtpsi = ops.d(psi, "tau") if ops.has("tau") else _npe_dtau_psi(ops, coeff, psi)
        chi = (rho0 / c2 * dtpsi
               - rho0 * (coeff.gamma - 1.0) / (2.0 * c2) * ops.d(psi, "z") ** 2
               - nu / c2 * ops.d(psi, "z", 2))
        return CorrectorSet(model, Field(grid, xi.copy()), Field(grid, chi),
                            None, Field(grid, psi))

    raise ValueError(f"unknown model {model!r}")


def assemble_ansatz(model: ModelKind, coeff: ModelCoefficients,
                    primary: ModelState, correctors: CorrectorSet,
                    use_full_second: bool = False):
    """Assemble the expanded flow state from a model solution.

    Kuznetsov returns a FlowState on the physical grid; KZK and NPE return an
    AnsatzProfile on the paraxial grid (axial velocity component first, then
    sqrt(eps)-scaled transverse components).
    """
    from .flow import FlowState  # local import to avoid a cycle

    grid = primary.primary.grid
    ops = _Ops(grid)
    eps = coeff.eps
    c, rho0 = coeff.c, coeff.rho0
    second = correctors.second_full if (
        use_full_second and correctors.second_full is not None
    ) else correctors.second
    rho = rho0 + eps * correctors.first.scalar + eps**2 * second.scalar

    if model is ModelKind.KUZNETSOV or model is ModelKind.WESTERVELT:
        u = primary.primary.scalar
        xnames = ops.group("x")
        v = np.stack([-eps * ops.d(u, n) for n in xnames], axis=-1)
        vf = Field(grid, v, len(xnames))
        return FlowState.from_primitive(Field(grid, rho), vf)

    if model is ModelKind.KZK:
        phi = correctors.potential.scalar
        dzphi = ops.d(phi, "z") if ops.has("z") else _kzk_dz_phi(ops, coeff, phi)
        comps = [eps / c * ops.d(phi, "tau") - eps**2 * dzphi]
        for name in ops.group("y"):
            comps.append(-eps**1.5 * ops.d(phi, name))
        vel = Field(grid, np.stack(comps, axis=-1), len(comps))
        return AnsatzProfile(Field(grid, rho), vel)

    if model is ModelKind.NPE:
        psi = correctors.potential.scalar
        comps = [-eps * ops.d(psi, "z")]
        for name in ops.group("y"):
            comps.append(-eps**1.5 * ops.d(psi, name))
        vel = Field(grid, np.stack(comps, axis=-1), len(comps))
        return AnsatzProfile(Field(grid, rho), vel)

    raise ValueError(f"unknown model {model!r}")


def westervelt_transform(coeff: ModelCoefficients, u: Field, u_t: Field) -> Field:
    """Quadratic change of unknown Pi = u + (eps/c^2) u u_t."""
    if u.grid != u_t.grid:
        raise ValueError("u and u_t must share one grid")
    eps, c2 = coeff.eps, coeff.c**2
    return u.with_values(u.values + eps / c2 * u.values * u_t.values)


def westervelt_initial_data(coeff: ModelCoefficients, u0: Field,
                            u1: Field) -> tuple[Field, Field]:
    """Initial data (Pi0, Pi1) matched to Kuznetsov data (u0, u1).

    Pi1 eliminates u_tt(0) through the Kuznetsov equation itself, which
    brings in the factor (1 - (gamma-1)/c^2 eps u1)^(-1); the map errors out
    if that factor's magnitude drops below 0.5 (loss of the hyperbolicity
    margin)."""
    if u0.grid != u1.grid:
        raise ValueError("u0 and u1 must share one grid")
    ops = _Ops(u0.grid)
    eps, c2 = coeff.eps, coeff.c**2
    a0, a1 = u0.scalar, u1.scalar
    factor = 1.0 - coeff.alpha * eps * a1
    if np.min(np.abs(factor)) < 0.5:
        raise ValueError(
            "degeneracy factor |1 - (gamma-1)/c^2 eps u1| dropped below 0.5"
        )
    pi0 = a0 + eps / c2 * a0 * a1
    grad_dot = np.zeros_like(a0)
    for name in ops.group("x"):
        grad_dot += ops.d(a0, name) * ops.d(a1, name)
    utt0 = (c2 * ops.lap(a0, "x") + coeff.nu / coeff.rho0 * eps * ops.lap(a1, "x")
            + 2.0 * eps * grad_dot) / factor
    pi1 = a1 + eps / c2 * a1**2 + eps / c2 * a0 * utt0
    grid = u0.grid
    return Field(grid, pi0), Field(grid, pi1)
