"""Isentropic compressible Navier-Stokes / Euler reference solver.

System (periodic 1D/2D, quadratic state law):

  d rho/dt + div(rho v) = 0
  rho (dv/dt + (v . grad) v) = -grad p(rho) + eps*nu Lap v
  p(rho) = p0 + c^2 (rho - rho0) + (gamma-1) c^2 / (2 rho0) (rho - rho0)^2

Mass is integrated in flux form (spectral divergence kills the zero mode, so
total mass is conserved to rounding), momentum in primitive velocity form and
re-multiplied by rho for output.  The dominant viscous term (eps nu/rho0) Lap v
is propagated exactly per mode; the density-dependent rest of the viscous
force is advanced explicitly together with the convective and pressure terms
(explicit midpoint, Strang split around the viscous half-steps).

Entropy diagnostics use the convex pair

  eta = rho h(rho) + rho |v|^2 / 2,  h'(rho) = p(rho)/rho^2,  q = v (eta + p)

with h normalized so that eta(rho0, 0) = 0.  Smooth admissible solutions
satisfy d eta/dt + div q - eps nu v . Lap v <= 0; on a torus the decay-at-
infinity boundary terms of the usual admissibility definition vanish
identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Field, Frame, Grid
from .models.base import ModelCoefficients, StepControl, check_health
from .spectral import dealias_array, deriv_array, wavenumbers

__all__ = [
    "FlowState",
    "pressure",
    "pressure_from_density",
    "solve_flow",
    "entropy_pair",
    "entropy_gradient",
    "entropy_hessian",
    "admissibility_residual",
    "flux",
]


@dataclass(frozen=True)
class FlowState:
    """Conservative variables (rho, rho*v) on one physical periodic grid."""

    rho: Field
    momentum: Field

    def __post_init__(self) -> None:
        if self.rho.grid != self.momentum.grid:
            raise ValueError("rho and momentum must share one grid")
        if self.momentum.components != len(self.rho.grid.axes):
            raise ValueError("momentum needs one component per grid axis")
        if np.min(self.rho.values) <= 0.0:
            raise ValueError("density must be positive everywhere")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def velocity(self) -> Field:
        return Field(self.grid, self.momentum.values / self.rho.values,
                     self.momentum.components)

    @classmethod
    def from_primitive(cls, rho: Field, v: Field) -> "FlowState":
        return cls(rho, Field(rho.grid, v.values * rho.values, v.components))


def pressure_from_density(coeff: ModelCoefficients, rho: np.ndarray,
                          p0: float = 0.0) -> np.ndarray:
    if np.min(rho) <= 0.0:
        raise ValueError("density must be positive")
    c2 = coeff.c**2
    dr = rho - coeff.rho0
    quad = (coeff.gamma - 1.0) * c2 / (2.0 * coeff.rho0)
    return p0 + c2 * dr + quad * dr**2


def pressure(coeff: ModelCoefficients, rho: Field, p0: float = 0.0) -> Field:
    """Quadratic state law p(rho)."""
    return rho.with_values(pressure_from_density(coeff, rho.values, p0))


def _dpressure(coeff: ModelCoefficients, rho: np.ndarray) -> np.ndarray:
    c2 = coeff.c**2
    return c2 + (coeff.gamma - 1.0) * c2 / coeff.rho0 * (rho - coeff.rho0)


def _axis_geometry(grid: Grid) -> list[tuple[int, float]]:
    for a in grid.axes:
        if not a.periodic:
            raise ValueError("flow solver needs periodic axes")
    return [(a.points, a.length) for a in grid.axes]


class _FlowStepper:
    def __init__(self, grid: Grid, coeff: ModelCoefficients, dt: float,
                 p0: float):
        self.grid = grid
        self.coeff = coeff
        self.dt = dt
        self.p0 = p0
        self.geom = _axis_geometry(grid)
        self.ndim = len(self.geom)
        # exact decay of the eps*nu/rho0 Lap v part per rfftn mode
        ks = []
        for i, (n, L) in enumerate(self.geom):
            if i == self.ndim - 1:
                k = 2 * np.pi * np.fft.rfftfreq(n, d=L / n)
            else:
                k = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
            shape = [1] * self.ndim
            shape[i] = k.size
            ks.append(k.reshape(shape))
        self.ksq = sum(k**2 for k in ks)
        self.visc0 = coeff.eps * coeff.nu / coeff.rho0
        self.decay_half = np.exp(-self.visc0 * self.ksq * dt / 2.0)

    def _d(self, v: np.ndarray, ax: int, order: int = 1) -> np.ndarray:
        n, L = self.geom[ax]
        return deriv_array(v, ax, n, L, order)

    def _dealias(self, v: np.ndarray) -> np.ndarray:
        for i, (n, _L) in enumerate(self.geom):
            v = dealias_array(v, i, n)
        return v

    def _visc_half(self, v: list[np.ndarray]) -> list[np.ndarray]:
        if self.visc0 == 0.0:
            return v
        out = []
        axes = range(self.ndim)
        for comp in v:
            ch = np.fft.rfftn(comp, axes=axes)
            out.append(np.fft.irfftn(ch * self.decay_half,
                                     s=self.grid.shape, axes=axes))
        return out

    def tendency(self, rho: np.ndarray, v: list[np.ndarray]):
        coeff = self.coeff
        drho = np.zeros_like(rho)
        for i in range(self.ndim):
            drho -= self._d(self._dealias(rho * v[i]), i)
        p = pressure_from_density(coeff, rho, self.p0)
        dv = []
        visc = coeff.eps * coeff.nu
        for i in range(self.ndim):
            acc = np.zeros_like(rho)
            for j in range(self.ndim):
                acc -= self._dealias(v[j] * self._d(v[i], j))
            acc -= self._dealias(self._d(p, i) / rho)
            if visc != 0.0:
                lap = sum(self._d(v[i], j, 2) for j in range(self.ndim))
                # correction beyond the exactly-propagated eps*nu/rho0 part
                acc += self._dealias(visc * lap * (1.0 / rho - 1.0 / coeff.rho0))
            dv.append(acc)
        return drho, dv

    def step(self, rho: np.ndarray, v: list[np.ndarray]):
        dt = self.dt
        v = self._visc_half(v)
        d1rho, d1v = self.tendency(rho, v)
        rho_m = rho + 0.5 * dt * d1rho
        v_m = [v[i] + 0.5 * dt * d1v[i] for i in range(self.ndim)]
        if np.min(rho_m) <= 0.0:
            raise RuntimeError("density positivity lost during midpoint stage")
        d2rho, d2v = self.tendency(rho_m, v_m)
        rho = rho + dt * d2rho
        v = [v[i] + dt * d2v[i] for i in range(self.ndim)]
        v = self._visc_half(v)
        return rho, v


def solve_flow(coeff: ModelCoefficients, init: FlowState, t_end: float,
               ctl: StepControl, p0: float = 0.0,
               n_samples: int = 2) -> list[tuple[float, FlowState]]:
    """Integrate the isentropic system up to t_end; returns (t, state) pairs."""
    grid = init.grid
    if grid.frame is not Frame.PHYSICAL:
        raise ValueError("flow states live on physical-frame grids")
    nsteps = max(1, int(math.ceil(t_end / ctl.step - 1e-12))) * ctl.substeps
    dt = t_end / nsteps
    stepper = _FlowStepper(grid, coeff, dt, p0)
    rho = init.rho.scalar.copy()
    v = [init.velocity().component(i).copy() for i in range(stepper.ndim)]
    init_norm = float(np.sqrt(np.sum(rho**2) + sum(np.sum(c**2) for c in v)))
    sample_at = sorted({round(j * nsteps / max(n_samples - 1, 1))
                        for j in range(max(n_samples, 2))} | {0, nsteps})

    def snapshot(t: float) -> tuple[float, FlowState]:
        rf = Field(grid, rho.copy())
        vf = Field(grid, np.stack(v, axis=-1), stepper.ndim)
        return (t, FlowState.from_primitive(rf, vf))

    out = []
    if 0 in sample_at:
        out.append(snapshot(0.0))
    for step in range(1, nsteps + 1):
        rho, v = stepper.step(rho, v)
        if np.min(rho) <= 0.0:
            raise RuntimeError(
                f"density positivity lost at t = {step * dt:.6g} "
                f"(min rho = {np.min(rho):.3e})"
            )
        check_health(rho, init_norm, f"flow step {step}")
        for comp in v:
            check_health(comp, init_norm, f"flow step {step}")
        if step in sample_at:
            out.append(snapshot(step * dt))
    return out


def _h_constants(coeff: ModelCoefficients, p0: float):
    """Closed-form primitive of p(rho)/rho^2 for the quadratic state law:
    h(rho) = -A/rho + B log rho + d rho + C0."""
    c2 = coeff.c**2
    d = (coeff.gamma - 1.0) * c2 / (2.0 * coeff.rho0)
    A = p0 - c2 * coeff.rho0 + d * coeff.rho0**2
    B = c2 - 2.0 * d * coeff.rho0
    C0 = A / coeff.rho0 - B * math.log(coeff.rho0) - d * coeff.rho0
    return A, B, d, C0


def _h(coeff: ModelCoefficients, rho: np.ndarray, p0: float) -> np.ndarray:
    A, B, d, C0 = _h_constants(coeff, p0)
    return -A / rho + B * np.log(rho) + d * rho + C0


def entropy_pair(coeff: ModelCoefficients, U: FlowState,
                 p0: float = 0.0) -> tuple[Field, Field]:
    """Convex entropy eta and its flux q = v (eta + p)."""
    rho = U.rho.scalar
    if np.min(rho) <= 0.0:
        raise ValueError("density must be positive")
    v = U.velocity().values
    vsq = np.sum(v**2, axis=-1)
    eta = rho * _h(coeff, rho, p0) + 0.5 * rho * vsq
    p = pressure_from_density(coeff, rho, p0)
    q = v * (eta + p)[..., np.newaxis]
    grid = U.grid
    return Field(grid, eta), Field(grid, q, U.momentum.components)


def entropy_gradient(coeff: ModelCoefficients, rho: np.ndarray, v: np.ndarray,
                     p0: float = 0.0):
    """d eta / d(rho, m): (H'(rho) - |v|^2/2, v) with H = rho h."""
    h = _h(coeff, rho, p0)
    Hp = h + pressure_from_density(coeff, rho, p0) / rho
    vsq = np.sum(np.atleast_1d(v) ** 2, axis=0)
    return Hp - 0.5 * vsq, np.atleast_1d(v)


def entropy_hessian(coeff: ModelCoefficients, rho: float, v,
                    p0: float = 0.0) -> np.ndarray:
    """Hessian of eta in conservative variables (rho, m) at one state:
    [[H''(rho) + |v|^2/rho, -v^T/rho], [-v/rho, (1/rho) Id]]."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    n = v.size
    Hpp = _dpressure(coeff, np.asarray(rho)) / rho
    out = np.zeros((n + 1, n + 1))
    out[0, 0] = Hpp + np.dot(v, v) / rho
    out[0, 1:] = -v / rho
    out[1:, 0] = -v / rho
    out[1:, 1:] = np.eye(n) / rho
    return out


def flux(coeff: ModelCoefficients, U: FlowState, i: int,
         p0: float = 0.0) -> Field:
    """Flux vector G_i(U) = (rho v_i, rho v_i v + p e_i)."""
    rho = U.rho.scalar
    if np.min(rho) <= 0.0:
        raise ValueError("density must be positive")
    v = U.velocity().values
    n = U.momentum.components
    if not 0 <= i < n:
        raise ValueError(f"axis index {i} out of range for {n} components")
    p = pressure_from_density(coeff, rho, p0)
    comps = [rho * v[..., i]]
    for j in range(n):
        g = rho * v[..., i] * v[..., j]
        if i == j:
            g = g + p
        comps.append(g)
    return Field(U.grid, np.stack(comps, axis=-1), n + 1)


def admissibility_residual(coeff: ModelCoefficients,
                           trajectory: list[tuple[float, FlowState]],
                           p0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Spatial integral of d eta/dt + div q - eps nu v . Lap v per sample.

    The time derivative uses central differences across the (uniformly
    sampled) trajectory, so values are reported at interior samples only.
    Returns (times, residuals).
    """
    if len(trajectory) < 3:
        raise ValueError("need at least 3 trajectory samples")
    times = np.array([t for t, _ in trajectory])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8):
        raise ValueError("trajectory must be uniformly sampled in time")
    dt = dts[0]
    grid = trajectory[0][1].grid
    w = grid.cell_volume
    geom = _axis_geometry(grid)
    etas = []
    for _t, U in trajectory:
        eta, _q = entropy_pair(coeff, U, p0)
        etas.append(np.sum(eta.scalar) * w)
    etas = np.array(etas)
    out_t, out_r = [], []
    for m in range(1, len(trajectory) - 1):
        t, U = trajectory[m]
        deta_dt = (etas[m + 1] - etas[m - 1]) / (2.0 * dt)
        # div q integrates to zero on the torus (spectral derivative of a
        # periodic field has zero mean) but is computed for completeness
        _eta, q = entropy_pair(coeff, U, p0)
        divq = np.zeros(grid.shape)
        for i, (n, L) in enumerate(geom):
            divq += deriv_array(q.component(i), i, n, L)
        vis = 0.0
        if coeff.nu > 0.0:
            v = U.velocity().values
            for i in range(U.momentum.components):
                lap = sum(deriv_array(v[..., i], j, n, L, 2)
                          for j, (n, L) in enumerate(geom))
                vis += np.sum(v[..., i] * lap) * w
        out_t.append(t)
        out_r.append(deta_dt + np.sum(divq) * w - coeff.eps * coeff.nu * vis)
    return np.array(out_t), np.array(out_r)
