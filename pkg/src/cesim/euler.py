"""
Incompressible 2D Euler flow in vorticity-streamfunction form.

The streamfunction lives at cell centers with zero face values on the
boundary.  It is averaged to cell corners, and face velocities are corner
differences, so the discrete divergence of ``u`` cancels identically and the
normal velocity on every boundary face is exactly zero.

Vorticity is transported by first-order upwind fluxes and forced by the
discrete curl of the buoyancy force ``-n grad(phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from cesim import linalg
from cesim.errors import CFLError
from cesim.grid import (
    FaceField,
    Grid,
    ScalarField,
    divergence_faces,
    fill_ghost_dirichlet,
    one_sided_gradient,
)


@dataclass
class FlowState:
    omega: ScalarField
    psi: ScalarField
    u: FaceField
    p: ScalarField | None = None

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def copy(self) -> FlowState:
        return FlowState(
            self.omega.copy(),
            self.psi.copy(),
            FaceField(self.u.grid, self.u.x.copy(), self.u.y.copy()),
            None if self.p is None else self.p.copy(),
        )


def solve_streamfunction(omega: ScalarField, tol: float = linalg.DEFAULT_TOL) -> ScalarField:
    """Solve -lap(psi) = omega with psi = 0 on the boundary."""
    g = omega.grid
    if not np.all(np.isfinite(omega.interior)):
        raise ValueError("vorticity contains non-finite values")
    rhs = linalg.flat(omega.interior)
    if not np.any(rhs):
        psi = fill_ghost_dirichlet(ScalarField.zeros(g, "psi"))
        psi.meta["residual"] = 0.0
        return psi
    solver = linalg.dirichlet_poisson(g, tol)
    x, res = solver.solve(rhs)
    psi = fill_ghost_dirichlet(ScalarField.from_interior(g, linalg.unflat(x, g), "psi"))
    psi.meta["residual"] = res
    return psi


def corner_values(psi: ScalarField) -> np.ndarray:
    """Streamfunction averaged to the (nx + 1, ny + 1) cell corners; zero on the boundary."""
    v = psi.values
    nodes = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    nodes[0, :] = nodes[-1, :] = 0.0
    nodes[:, 0] = nodes[:, -1] = 0.0
    return nodes


def velocity_from_streamfunction(psi: ScalarField) -> FaceField:
    """Face velocity u = (d psi/dy, -d psi/dx) from corner differences."""
    g = psi.grid
    if psi.ghost is None:
        psi = fill_ghost_dirichlet(psi)
    nodes = corner_values(psi)
    ux = np.diff(nodes, axis=1) / g.hy
    uy = -np.diff(nodes, axis=0) / g.hx
    return FaceField(g, ux, uy)


def flow_from_vorticity(omega: ScalarField, tol: float = linalg.DEFAULT_TOL) -> FlowState:
    psi = solve_streamfunction(omega, tol)
    return FlowState(omega, psi, velocity_from_streamfunction(psi))


def flow_from_streamfunction(psi_interior: np.ndarray, grid: Grid) -> FlowState:
    """Build a flow from an initial streamfunction (boundary values forced to zero)."""
    from cesim.grid import laplacian

    psi = fill_ghost_dirichlet(ScalarField.from_interior(grid, psi_interior, "psi"))
    omega = laplacian(psi)
    omega.values *= -1.0
    omega.name = "omega"
    return FlowState(omega, psi, velocity_from_streamfunction(psi))


def velocity_divergence(u: FaceField) -> np.ndarray:
    return divergence_faces(u).interior


# --------------------------------------------------------------------------
# transport


def upwind_flux_divergence(q: np.ndarray, w: FaceField) -> np.ndarray:
    """div(w q) with q upwinded on interior faces; boundary faces carry no flux."""
    g = w.grid
    fx = np.zeros((g.nx + 1, g.ny))
    fy = np.zeros((g.nx, g.ny + 1))
    wx, wy = w.x[1:-1, :], w.y[:, 1:-1]
    fx[1:-1, :] = np.where(wx > 0, wx * q[:-1, :], wx * q[1:, :])
    fy[:, 1:-1] = np.where(wy > 0, wy * q[:, :-1], wy * q[:, 1:])
    return (fx[1:, :] - fx[:-1, :]) / g.hx + (fy[:, 1:] - fy[:, :-1]) / g.hy


def outflow_rate(*velocities: FaceField) -> float:
    """Largest per-cell outflow rate (sum of outgoing normal speeds / h), interior faces only.

    Each velocity field is upwinded separately, so their outflows add.  An
    explicit upwind update with dt * rate <= 1 is a convex combination.
    """
    g = velocities[0].grid
    rate = np.zeros(g.shape)
    for w in velocities:
        wx = w.x.copy()
        wy = w.y.copy()
        wx[0, :] = wx[-1, :] = 0.0
        wy[:, 0] = wy[:, -1] = 0.0
        rate += (np.maximum(wx[1:, :], 0) + np.maximum(-wx[:-1, :], 0)) / g.hx
        rate += (np.maximum(wy[:, 1:], 0) + np.maximum(-wy[:, :-1], 0)) / g.hy
    return float(rate.max())


def check_cfl(dt: float, rate: float, cfl: float, what: str) -> None:
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    # relative slack so that dt = cfl / rate itself is accepted despite rounding
    if dt * rate > cfl * (1.0 + 1e-12):
        admissible = cfl / rate
        raise CFLError(f"{what}: dt={dt:.6g} violates the CFL limit; admissible dt <= {admissible:.6g}", admissible)


# --------------------------------------------------------------------------
# forcing


def buoyancy_force(n: ScalarField, phi: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered momentum forcing -n grad(phi)."""
    dphix, dphiy = one_sided_gradient(phi.interior, phi.grid)
    return -n.interior * dphix, -n.interior * dphiy


def discrete_curl(fx: np.ndarray, fy: np.ndarray, grid: Grid) -> np.ndarray:
    """d(fy)/dx - d(fx)/dy with the same stencils as :func:`one_sided_gradient`."""
    return np.gradient(fy, grid.hx, axis=0, edge_order=2) - np.gradient(fx, grid.hy, axis=1, edge_order=2)


def vorticity_source(n: ScalarField, phi: ScalarField) -> ScalarField:
    """Curl of the buoyancy force, i.e. -[d(n phi_y)/dx - d(n phi_x)/dy]."""
    fx, fy = buoyancy_force(n, phi)
    return ScalarField.from_interior(n.grid, discrete_curl(fx, fy, n.grid), "vorticity_source")


def step_vorticity(
    state: FlowState,
    n: ScalarField,
    phi: ScalarField,
    dt: float,
    cfl: float = 0.9,
    extra_source: np.ndarray | None = None,
    tol: float = linalg.DEFAULT_TOL,
) -> FlowState:
    """Advance vorticity by one explicit upwind step and rebuild psi and u."""
    check_cfl(dt, outflow_rate(state.u), cfl, "vorticity advection")
    w = state.omega.interior
    rhs = vorticity_source(n, phi).interior
    if extra_source is not None:
        rhs = rhs + extra_source
    w_new = w - dt * upwind_flux_divergence(w, state.u) + dt * rhs
    omega = ScalarField.from_interior(state.grid, w_new, "omega")
    return flow_from_vorticity(omega, tol)


def advance_passive(q: ScalarField, u: FaceField, dt: float, source: np.ndarray | None = None, cfl: float = 0.9) -> ScalarField:
    """Explicit upwind transport of a passive scalar (used for verification)."""
    check_cfl(dt, outflow_rate(u), cfl, "passive advection")
    new = q.interior - dt * upwind_flux_divergence(q.interior, u)
    if source is not None:
        new = new + dt * source
    return q.with_interior(new)


# --------------------------------------------------------------------------
# pressure


def _cell_velocity_gradient(u: FaceField):
    ucx, ucy = u.cell_average()
    g = u.grid
    dux, duy = one_sided_gradient(ucx, g)
    dvx, dvy = one_sided_gradient(ucy, g)
    return ucx, ucy, dux, duy, dvx, dvy


def recover_pressure(state: FlowState, n: ScalarField, phi: ScalarField, tol: float = linalg.DEFAULT_TOL) -> ScalarField:
    """Diagnostic pressure from the momentum balance, normalized to zero mean.

    Solves lap(p) = div(G) with dp/dnu = G . nu, where G = -(u . grad)u - n grad(phi)
    is assembled on faces.  The discrete right-hand side telescopes to zero,
    so the Neumann problem is compatible up to roundoff (projected out).
    """
    g = state.grid
    ucx, ucy, dux, duy, dvx, dvy = _cell_velocity_gradient(state.u)
    ax = -(ucx * dux + ucy * duy)
    ay = -(ucx * dvx + ucy * dvy)

    nv = n.interior
    ph = phi.interior
    Gx = np.zeros((g.nx + 1, g.ny))
    Gy = np.zeros((g.nx, g.ny + 1))
    Gx[1:-1, :] = 0.5 * (ax[1:, :] + ax[:-1, :]) - 0.5 * (nv[1:, :] + nv[:-1, :]) * np.diff(ph, axis=0) / g.hx
    Gy[:, 1:-1] = 0.5 * (ay[:, 1:] + ay[:, :-1]) - 0.5 * (nv[:, 1:] + nv[:, :-1]) * np.diff(ph, axis=1) / g.hy

    # boundary faces keep G = 0: the Neumann data G . nu enters the flux balance
    # of the boundary cells on both sides and cancels, leaving only interior faces
    rhs = divergence_faces(FaceField(g, Gx, Gy)).interior
    rhs = rhs - rhs.mean()
    solver = linalg.neumann_pressure_system(g, tol)
    sol, res = solver.solve(np.concatenate([linalg.flat(rhs), [0.0]]))
    p = linalg.unflat(sol[:-1], g)
    p = p - p.mean()
    out = ScalarField.from_interior(g, p, "p")
    out.meta["residual"] = res
    return out


def with_pressure(state: FlowState, n: ScalarField, phi: ScalarField) -> FlowState:
    return replace(state, p=recover_pressure(state, n, phi))
