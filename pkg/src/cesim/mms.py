"""Manufactured-solution convergence studies.

Each suite fixes closed-form fields, derives the forcing (and Robin data)
symbolically with sympy, runs the discrete steppers on a sequence of grids,
and reports L2 errors at the final time with pairwise observed orders.

Suites:

``diffusion_robin``  oxygen equation without flow, fixed consumption n = 1,
                     time-dependent Robin data; dt = h^2 (expected order 2)
``advection``        passive upwind transport by a steady cellular flow;
                     dt = h/4 (expected order 1)
``n_equation``       bacteria equation with prescribed flow and oxygen;
                     dt = h/4 (expected order 1)
``coupled``          full flow / oxygen / bacteria system with forcing in all
                     three equations; dt = h/5 (expected order 1); the
                     error is the largest relative L2 error of n, c, omega
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from cesim import chemotaxis as chem
from cesim import euler
from cesim.grid import BoundarySpec, Grid, ScalarField, fill_ghost_robin, lq_norm

SUITES = ("diffusion_robin", "advection", "n_equation", "coupled")
DEFAULT_SIZES = (16, 32, 64, 128)

x, y, t = sp.symbols("x y t", real=True)


@dataclass
class ConvergenceTable:
    suite: str
    sizes: list[int] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)

    @property
    def orders(self) -> list[float]:
        """Observed orders between consecutive grids (NaN for the first row)."""
        out = [math.nan]
        for k in range(1, len(self.errors)):
            e0, e1 = self.errors[k - 1], self.errors[k]
            out.append(math.log(e0 / e1) / math.log(self.h[k - 1] / self.h[k]) if e0 > 0 and e1 > 0 else math.nan)
        return out

    @property
    def last_order(self) -> float:
        return self.orders[-1]

    def rows(self):
        return list(zip(self.sizes, self.h, self.errors, self.orders))

    def __str__(self):
        lines = [f"suite {self.suite}", f"{'N':>6} {'h':>12} {'L2 error':>14} {'order':>8}"]
        for n, h, e, o in self.rows():
            lines.append(f"{n:>6} {h:>12.5e} {e:>14.6e} {'-' if math.isnan(o) else f'{o:.3f}':>8}")
        return "\n".join(lines)


def _fn(expr):
    f = sp.lambdify((x, y, t), expr, "numpy")

    def call(X, Y, T):
        return np.broadcast_to(np.asarray(f(X, Y, T), dtype=float), np.broadcast(X, Y).shape).copy()

    return call


def _lap(e):
    return sp.diff(e, x, 2) + sp.diff(e, y, 2)


def _velocity(psi):
    # u = (d psi/dy, -d psi/dx), matching the discrete perpendicular gradient
    return sp.diff(psi, y), -sp.diff(psi, x)


def _robin_gamma(grid: Grid, c_expr, kappa: float):
    """gamma = c + (dc/dnu)/kappa at the boundary face midpoints, as a function of t."""
    cx, cy, c = _fn(sp.diff(c_expr, x)), _fn(sp.diff(c_expr, y)), _fn(c_expr)
    xm, ym = grid.bface_mid[:, 0], grid.bface_mid[:, 1]
    nu = grid.bface_normal

    def gamma(tk):
        dn = cx(xm, ym, tk) * nu[:, 0] + cy(xm, ym, tk) * nu[:, 1]
        return c(xm, ym, tk) + dn / kappa

    return gamma


# --------------------------------------------------------------------------
# suites


def _diffusion_robin(N: int, T: float = 1.0 / 16) -> float:
    kappa = 2.0
    c_ex = sp.exp(-t) * (2 + sp.cos(sp.pi * x / 2 + sp.Rational(3, 10)) * sp.cos(sp.pi * y / 2 + sp.Rational(1, 5))) / 96
    n_val = 1.0
    f = _fn(sp.diff(c_ex, t) - _lap(c_ex) + n_val * c_ex)
    c_fn = _fn(c_ex)
    g = Grid(N, N)
    X, Y = g.centers
    gamma = _robin_gamma(g, c_ex, kappa)
    nsteps = int(round(T / g.hx**2))
    dt = T / nsteps
    kap = np.full(g.n_boundary_faces, kappa)
    c = fill_ghost_robin(ScalarField.from_interior(g, c_fn(X, Y, 0.0), "c"), BoundarySpec(g, kap, gamma(0.0)))
    n = ScalarField.from_interior(g, np.full(g.shape, n_val), "n")
    u = euler.FaceField.zeros(g)
    for k in range(nsteps):
        tk1 = (k + 1) * dt
        bs = BoundarySpec(g, kap, gamma(tk1))
        c = chem.step_c(c, u, n, bs, dt, f(X, Y, tk1))
    return lq_norm(c.interior - c_fn(X, Y, T), 2, g)


def _cellular_psi(amplitude=1.0):
    return amplitude * (sp.sin(sp.pi * x) * sp.sin(sp.pi * y)) / sp.pi


def _advection(N: int, T: float = 0.25) -> float:
    psi = _cellular_psi()
    ux, uy = _velocity(psi)
    q_ex = sp.exp(-t) * (1 + sp.Rational(1, 2) * sp.sin(2 * sp.pi * x + sp.Rational(1, 2)) * sp.cos(sp.pi * y))
    f = _fn(sp.diff(q_ex, t) + ux * sp.diff(q_ex, x) + uy * sp.diff(q_ex, y))
    q_fn = _fn(q_ex)
    g = Grid(N, N)
    X, Y = g.centers
    u = euler.flow_from_streamfunction(_fn(psi)(X, Y, 0.0), g).u
    nsteps = int(math.ceil(T / (0.25 * g.hx)))
    dt = T / nsteps
    q = ScalarField.from_interior(g, q_fn(X, Y, 0.0), "q")
    for k in range(nsteps):
        q = euler.advance_passive(q, u, dt, f(X, Y, k * dt))
    return lq_norm(q.interior - q_fn(X, Y, T), 2, g)


def _n_fields():
    # zero normal derivatives on the unit square, so the no-flux condition holds exactly
    n_ex = sp.exp(-t / 2) * (1 + sp.Rational(1, 2) * sp.cos(sp.pi * x) * sp.cos(2 * sp.pi * y))
    c_ex = (1 + t) * (1 + sp.cos(sp.pi * x) * sp.cos(sp.pi * y)) / 96
    return n_ex, c_ex


def _n_forcing(n_ex, c_ex, ux, uy):
    chem_div = sp.diff(n_ex * sp.diff(c_ex, x), x) + sp.diff(n_ex * sp.diff(c_ex, y), y)
    return sp.diff(n_ex, t) + ux * sp.diff(n_ex, x) + uy * sp.diff(n_ex, y) + chem_div - _lap(n_ex)


def _n_equation(N: int, T: float = 0.25) -> float:
    psi = _cellular_psi(sp.Rational(1, 2))
    ux, uy = _velocity(psi)
    n_ex, c_ex = _n_fields()
    f = _fn(_n_forcing(n_ex, c_ex, ux, uy))
    n_fn, c_fn = _fn(n_ex), _fn(c_ex)
    g = Grid(N, N)
    X, Y = g.centers
    u = euler.flow_from_streamfunction(_fn(psi)(X, Y, 0.0), g).u
    nsteps = int(math.ceil(T / (0.25 * g.hx)))
    dt = T / nsteps
    n = ScalarField.from_interior(g, n_fn(X, Y, 0.0), "n")
    for k in range(nsteps):
        tk = k * dt
        c = ScalarField.from_interior(g, c_fn(X, Y, tk), "c")
        n = chem.step_n(n, u, c, dt, f(X, Y, tk))
    return lq_norm(n.interior - n_fn(X, Y, T), 2, g)


def _coupled(N: int, T: float = 0.1) -> float:
    from cesim.simulate import Model, SimState, advance

    kappa = 1.0
    psi = (1 + t) * (sp.sin(sp.pi * x) * sp.sin(sp.pi * y) + sp.Rational(1, 2) * sp.sin(2 * sp.pi * x) * sp.sin(sp.pi * y)) / (2 * sp.pi)
    ux, uy = _velocity(psi)
    omega = -_lap(psi)
    n_ex, c_ex = _n_fields()
    phi = y
    # curl of the buoyancy force -n grad(phi)
    buoy = -(sp.diff(n_ex * sp.diff(phi, y), x) - sp.diff(n_ex * sp.diff(phi, x), y))
    f_w = _fn(sp.diff(omega, t) + ux * sp.diff(omega, x) + uy * sp.diff(omega, y) - buoy)
    f_c = _fn(sp.diff(c_ex, t) + ux * sp.diff(c_ex, x) + uy * sp.diff(c_ex, y) - _lap(c_ex) + n_ex * c_ex)
    f_n = _fn(_n_forcing(n_ex, c_ex, ux, uy))
    n_fn, c_fn, w_fn, psi_fn = _fn(n_ex), _fn(c_ex), _fn(omega), _fn(psi)

    g = Grid(N, N)
    X, Y = g.centers
    gamma = _robin_gamma(g, c_ex, kappa)
    kap = np.full(g.n_boundary_faces, kappa)
    bs0 = BoundarySpec(g, kap, gamma(0.0))
    phi_f = ScalarField.from_interior(g, Y.copy(), "phi")
    model = Model(g, bs0, phi_f, cfl=0.9)
    state = SimState(
        0.0, 0,
        ScalarField.from_interior(g, n_fn(X, Y, 0.0), "n"),
        fill_ghost_robin(ScalarField.from_interior(g, c_fn(X, Y, 0.0), "c"), bs0),
        euler.flow_from_streamfunction(psi_fn(X, Y, 0.0), g),
    )
    nsteps = int(math.ceil(T / (0.2 * g.hx)))
    dt = T / nsteps
    for k in range(nsteps):
        tk, tk1 = k * dt, (k + 1) * dt
        src = {"omega": f_w(X, Y, tk), "c": f_c(X, Y, tk1), "n": f_n(X, Y, tk)}
        state = advance(state, dt, model, src, BoundarySpec(g, kap, gamma(tk1)))
    # largest relative error over the three evolved fields
    return max(
        lq_norm(num - ex, 2, g) / lq_norm(ex, 2, g)
        for num, ex in (
            (state.n.interior, n_fn(X, Y, T)),
            (state.c.interior, c_fn(X, Y, T)),
            (state.flow.omega.interior, w_fn(X, Y, T)),
        )
    )


_RUNNERS = {
    "diffusion_robin": _diffusion_robin,
    "advection": _advection,
    "n_equation": _n_equation,
    "coupled": _coupled,
}


def mms_convergence(suite: str, sizes=DEFAULT_SIZES) -> ConvergenceTable:
    """Run one manufactured-solution suite over square grids of the given sizes."""
    if suite not in _RUNNERS:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    table = ConvergenceTable(suite)
    for N in sizes:
        table.sizes.append(int(N))
        table.h.append(1.0 / N)
        table.errors.append(_RUNNERS[suite](int(N)))
    return table
