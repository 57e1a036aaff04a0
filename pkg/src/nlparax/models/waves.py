"""Kuznetsov and Westervelt solvers (second-order wave models in time).

Both equations are integrated as first-order systems in (u, u_t) with Strang
splitting: the stiff linear part (c^2 Laplacian plus the eps*nu/rho0 viscous
damping of u_t) is propagated exactly per Fourier mode by a closed-form 2x2
matrix exponential, and the nonlinear tendency is advanced by the explicit
midpoint rule with dealiased products.

Kuznetsov:   u_tt - c^2 Lap u = eps d/dt( (grad u)^2
                                          + (gamma-1)/(2 c^2) (u_t)^2
                                          + (nu/rho0) Lap u )
Westervelt:  P_tt - c^2 Lap P = eps d/dt( (nu/rho0) Lap P
                                          + (gamma+1)/(2 c^2) (P_t)^2 )

Expanding the time derivative on the right moves the u_t u_tt term to the
left, so each step solves for u_tt through the factor (1 - eps*a*u_t) with
a = (gamma-1)/c^2 (Kuznetsov, plus the 2 grad u . grad u_t term) or
a = (gamma+1)/c^2 (Westervelt, no gradient term).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fields import Field, Grid
from ..spectral import dealias_array
from .base import (
    ModelCoefficients,
    ModelKind,
    ModelState,
    StepControl,
    check_health,
)

__all__ = ["NonlinearitySwitch", "solve_kuznetsov", "solve_westervelt"]


@dataclass(frozen=True)
class NonlinearitySwitch:
    """Independent toggles for each nonlinear term and the viscosity."""

    local: bool = True      # u_t u_tt term
    gradient: bool = True   # grad u . grad u_t term
    viscosity: bool = True  # eps nu/rho0 Lap u_t term


def _wavenumber_axes(grid: Grid) -> list[np.ndarray]:
    """Angular wavenumbers per axis for an rfftn over all grid axes."""
    ks = []
    nax = len(grid.axes)
    for i, a in enumerate(grid.axes):
        if not a.periodic:
            raise ValueError(f"axis {a.name!r} must be periodic")
        if i == nax - 1:
            k = 2 * np.pi * np.fft.rfftfreq(a.points, d=a.length / a.points)
        else:
            k = 2 * np.pi * np.fft.fftfreq(a.points, d=a.length / a.points)
        shape = [1] * nax
        shape[i] = k.size
        ks.append(k.reshape(shape))
    return ks


def _ksq(grid: Grid) -> np.ndarray:
    ks = _wavenumber_axes(grid)
    out = sum(k**2 for k in ks)
    return np.asarray(out)


def _linear_propagator(ksq: np.ndarray, c: float, damp: float, dt: float):
    """Entries of exp(dt*M) for M = [[0, 1], [-c^2 k^2, -damp k^2]] per mode."""
    a = damp * ksq
    b = (c**2) * ksq
    disc = np.asarray(a**2 - 4.0 * b, dtype=np.complex128)
    sq = np.sqrt(disc)
    lp = 0.5 * (-a + sq)
    lm = 0.5 * (-a - sq)
    delta = lp - lm
    degenerate = np.abs(delta) < 1e-13 * (np.abs(lp) + np.abs(lm) + 1.0)
    delta_safe = np.where(degenerate, 1.0, delta)
    ep, em = np.exp(lp * dt), np.exp(lm * dt)
    e11 = (lp * em - lm * ep) / delta_safe
    e12 = (ep - em) / delta_safe
    e22 = (lp * ep - lm * em) / delta_safe
    # critical/zero modes: exp(dt*M) -> [[1-l*dt, dt], [-b dt ..]] limit
    lam = 0.5 * (lp + lm)
    el = np.exp(lam * dt)
    e11 = np.where(degenerate, el * (1.0 - lam * dt), e11)
    e12 = np.where(degenerate, el * dt, e12)
    e22 = np.where(degenerate, el * (1.0 + lam * dt), e22)
    e21 = -b * e12
    # M is real, so exp(dt*M) is real; the imaginary parts are rounding noise.
    return e11.real, e12.real, e21.real, e22.real


class _WaveStepper:
    """Strang-split stepper shared by the Kuznetsov and Westervelt models."""

    def __init__(self, grid: Grid, coeff: ModelCoefficients, dt: float,
                 a_local: float, b_grad: float, viscous: bool):
        self.grid = grid
        self.coeff = coeff
        self.dt = dt
        self.a_local = a_local
        self.b_grad = b_grad
        self.ksq = _ksq(grid)
        self.kaxes = _wavenumber_axes(grid)
        damp = coeff.eps * coeff.nu / coeff.rho0 if viscous else 0.0
        self.damp = damp
        self.half = _linear_propagator(self.ksq, coeff.c, damp, dt / 2.0)
        self.shape = grid.shape
        self.axlens = [(a.points, a.length) for a in grid.axes]

    def _fft(self, v: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(v, axes=range(len(self.shape)))

    def _ifft(self, vh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(vh, s=self.shape, axes=range(len(self.shape)))

    def _dealias(self, v: np.ndarray) -> np.ndarray:
        for i, (n, _L) in enumerate(self.axlens):
            v = dealias_array(v, i, n)
        return v

    def linear_half(self, u: np.ndarray, w: np.ndarray):
        uh, wh = self._fft(u), self._fft(w)
        e11, e12, e21, e22 = self.half
        uh2 = e11 * uh + e12 * wh
        wh2 = e21 * uh + e22 * wh
        return self._ifft(uh2), self._ifft(wh2)

    def nonlinear_tendency(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Deviation of w_t from the linear tendency, dealiased."""
        c2 = self.coeff.c**2
        eps = self.coeff.eps
        uh, wh = self._fft(u), self._fft(w)
        lin = self._ifft((-c2 * self.ksq) * uh + (-self.damp * self.ksq) * wh)
        rhs = lin
        if self.b_grad != 0.0:
            gdot = np.zeros_like(u)
            for i, (n, L) in enumerate(self.axlens):
                kax = self.kaxes[i]
                du = self._ifft(1j * kax * uh)
                dw = self._ifft(1j * kax * wh)
                gdot = gdot + self._dealias(du * dw)
            rhs = rhs + eps * self.b_grad * gdot
        if self.a_local != 0.0:
            denom = 1.0 - eps * self.a_local * w
            return self._dealias(rhs / denom - lin)
        return self._dealias(rhs - lin)

    def nonlinear_full(self, u: np.ndarray, w: np.ndarray):
        """Explicit midpoint for the nonlinear flow (u frozen, w evolves)."""
        if self.a_local == 0.0 and self.b_grad == 0.0:
            return u, w
        dt = self.dt
        k1 = self.nonlinear_tendency(u, w)
        k2 = self.nonlinear_tendency(u, w + 0.5 * dt * k1)
        return u, w + dt * k2

    def step(self, u: np.ndarray, w: np.ndarray):
        u, w = self.linear_half(u, w)
        u, w = self.nonlinear_full(u, w)
        u, w = self.linear_half(u, w)
        return u, w


def _march(kind: ModelKind, stepper: _WaveStepper, grid: Grid,
           u: np.ndarray, w: np.ndarray, t_end: float, nsteps: int,
           n_samples: int) -> list[ModelState]:
    dt = stepper.dt
    init_norm = float(np.sqrt(np.sum(u**2) + np.sum(w**2)))
    sample_at = sorted({round(j * nsteps / max(n_samples - 1, 1))
                        for j in range(max(n_samples, 2))} | {0, nsteps})
    out: list[ModelState] = []
    if 0 in sample_at:
        out.append(ModelState(kind, 0.0, Field(grid, u), Field(grid, w)))
    for step in range(1, nsteps + 1):
        u, w = stepper.step(u, w)
        check_health(u, init_norm, f"{kind.value} step {step}")
        check_health(w, init_norm, f"{kind.value} step {step}")
        if step in sample_at:
            out.append(ModelState(kind, step * dt, Field(grid, u), Field(grid, w)))
    return out


def _resolve_steps(t_end: float, ctl: StepControl) -> tuple[int, float]:
    nsteps = max(1, int(np.ceil(t_end / ctl.step - 1e-12))) * ctl.substeps
    return nsteps, t_end / nsteps


def solve_kuznetsov(coeff: ModelCoefficients, u0: Field, u1: Field,
                    t_end: float, ctl: StepControl,
                    switch: NonlinearitySwitch = NonlinearitySwitch(),
                    n_samples: int = 2) -> list[ModelState]:
    """Integrate the Kuznetsov equation from (u0, u1) up to t = t_end.

    Returns n_samples states evenly spaced in steps (always including the
    initial and final state)."""
    if u0.grid != u1.grid:
        raise ValueError("u0 and u1 must share one grid")
    nsteps, dt = _resolve_steps(t_end, ctl)
    a_local = coeff.alpha if switch.local else 0.0
    b_grad = coeff.beta_nl if switch.gradient else 0.0
    stepper = _WaveStepper(u0.grid, coeff, dt, a_local, b_grad, switch.viscosity)
    return _march(ModelKind.KUZNETSOV, stepper, u0.grid,
                  u0.scalar.copy(), u1.scalar.copy(), t_end, nsteps, n_samples)


def solve_westervelt(coeff: ModelCoefficients, Pi0: Field, Pi1: Field,
                     t_end: float, ctl: StepControl,
                     switch: NonlinearitySwitch = NonlinearitySwitch(),
                     n_samples: int = 2) -> list[ModelState]:
    """Integrate the Westervelt equation from (Pi0, Pi1) up to t = t_end."""
    if Pi0.grid != Pi1.grid:
        raise ValueError("Pi0 and Pi1 must share one grid")
    nsteps, dt = _resolve_steps(t_end, ctl)
    a_local = (coeff.gamma + 1.0) / coeff.c**2 if switch.local else 0.0
    stepper = _WaveStepper(Pi0.grid, coeff, dt, a_local, 0.0, switch.viscosity)
    return _march(ModelKind.WESTERVELT, stepper, Pi0.grid,
                  Pi0.scalar.copy(), Pi1.scalar.copy(), t_end, nsteps, n_samples)
