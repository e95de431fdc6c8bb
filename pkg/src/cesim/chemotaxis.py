"""
Time steppers for bacteria density n and oxygen concentration c.

All steppers are IMEX: advection and chemotactic drift are explicit
first-order upwind fluxes, diffusion is backward Euler, and oxygen
consumption is implicit in c.  Besides the direct variables, two transformed
formulations are provided:

    n_tilde = n exp(-c)                   (homogeneous Neumann data)
    c_tilde = exp(g1) (g2 - c)            (homogeneous Neumann data)

where g1, g2 are lifts of the Robin data built by :func:`lift_g1_g2`.
"""

from __future__ import annotations

import hashlib
import warnings

import numpy as np
import scipy.sparse as sp

from cesim import linalg
from cesim.euler import check_cfl, outflow_rate, upwind_flux_divergence
from cesim.grid import (
    BoundarySpec,
    FaceField,
    Grid,
    ScalarField,
    apply_closure,
    boundary_normal_gradient,
    cell_gradient,
    fill_ghost_neumann,
    fill_ghost_robin,
    interior_face_gradient,
    laplacian,
    robin_closure,
)

G2_NORMAL_WARN = 1e-3


def chemotactic_velocity(c: ScalarField) -> FaceField:
    """Drift velocity grad(c) on interior faces; zero on boundary faces."""
    g = c.grid
    gx, gy = interior_face_gradient(c.interior, g)
    wx = np.zeros((g.nx + 1, g.ny))
    wy = np.zeros((g.nx, g.ny + 1))
    wx[1:-1, :] = gx
    wy[:, 1:-1] = gy
    return FaceField(g, wx, wy)


def _check_robin_resolution(bs: BoundarySpec) -> None:
    a, _ = robin_closure(bs)
    if np.any(a < 0):
        from cesim.errors import MeshResolutionError

        raise MeshResolutionError("kappa * h > 2 on some face: the Robin closure loses monotonicity; refine the mesh")


def step_c(
    c: ScalarField,
    u: FaceField,
    n: ScalarField,
    bs: BoundarySpec,
    dt: float,
    source: np.ndarray | None = None,
    cfl: float = 0.9,
    tol: float = linalg.DEFAULT_TOL,
) -> ScalarField:
    """One IMEX step of c_t + u.grad(c) + n c = lap(c) with Robin boundary data.

    ``source`` is an optional explicit forcing added to the right-hand side.
    """
    g = c.grid
    if np.any(n.interior < 0):
        raise ValueError(f"step_c needs n >= 0 (min {n.interior.min():.3g})")
    check_cfl(dt, outflow_rate(u), cfl, "oxygen advection")
    _check_robin_resolution(bs)
    a, b = robin_closure(bs)
    c_star = c.interior - dt * upwind_flux_divergence(c.interior, u)
    rhs = linalg.flat(c_star) + dt * linalg.closure_rhs(g, b)
    if source is not None:
        rhs = rhs + dt * linalg.flat(source)
    x, res = _oxygen_operator(g, float(dt), a, n.interior, tol).solve(rhs)
    out = fill_ghost_robin(ScalarField.from_interior(g, linalg.unflat(x, g), "c"), bs)
    out.meta["residual"] = res
    return out


_OXYGEN_CACHE: dict = {}


def _oxygen_operator(g: Grid, dt: float, a: np.ndarray, n: np.ndarray, tol: float) -> linalg.Factorized:
    """Factorized I - dt L_R + dt diag(n); the last one is kept, since n is often unchanged."""
    key = (g, dt, tol, hashlib.sha1(a.tobytes() + n.tobytes()).hexdigest())
    hit = _OXYGEN_CACHE.get("key") == key
    if not hit:
        A = sp.identity(g.size) - dt * linalg.laplacian_matrix(g, a) + sp.diags(dt * linalg.flat(n))
        _OXYGEN_CACHE.update(key=key, op=linalg.Factorized(A, tol, "oxygen implicit step"))
    return _OXYGEN_CACHE["op"]


def n_outflow_rate(u: FaceField, c: ScalarField) -> float:
    return outflow_rate(u, chemotactic_velocity(c))


def step_n(
    n: ScalarField,
    u: FaceField,
    c: ScalarField,
    dt: float,
    source: np.ndarray | None = None,
    cfl: float = 0.9,
    tol: float = linalg.DEFAULT_TOL,
) -> ScalarField:
    """One conservative step of n_t + u.grad(n) + div(n grad c) = lap(n).

    Advective and chemotactic fluxes are upwinded separately on interior
    faces; every boundary face carries zero total flux.
    """
    g = n.grid
    w = chemotactic_velocity(c)
    check_cfl(dt, outflow_rate(u, w), cfl, "bacteria transport")
    q = n.interior
    n_star = q - dt * (upwind_flux_divergence(q, u) + upwind_flux_divergence(q, w))
    if source is not None:
        n_star = n_star + dt * source
    x, res = linalg.implicit_neumann_heat(g, float(dt), tol).solve(linalg.flat(n_star))
    out = ScalarField.from_interior(g, linalg.unflat(x, g), "n")
    out.meta["residual"] = res
    return out


# --------------------------------------------------------------------------
# lifts of the Robin data


def lift_g1(bs: BoundarySpec, tol: float = linalg.DEFAULT_TOL) -> ScalarField:
    """Solve (1 - lap) g1 = 0 with dg1/dnu = kappa."""
    g = bs.grid
    if bs.kappa_is_zero:
        return fill_ghost_neumann(ScalarField.zeros(g, "g1"))
    h = g.bface_spacing
    a, b = np.ones_like(h), h * bs.kappa
    A = sp.identity(g.size) - linalg.laplacian_matrix(g, a)
    x, _ = linalg.solve(A, linalg.closure_rhs(g, b), tol, "lift g1")
    return apply_closure(ScalarField.from_interior(g, linalg.unflat(x, g), "g1"), a, b, kind="lift")


def _biharmonic_lift(grid: Grid, gamma: np.ndarray, tol: float) -> np.ndarray:
    """Clamped-plate lift: bilap(g2) = 0 inside, g2 = gamma and dg2/dnu = 0 on the boundary.

    The boundary ring of interior cells and the ghost layer both carry the face
    value of gamma, so the discrete normal difference across every boundary
    face vanishes and the face value equals gamma (corner cells average their
    two faces, and so do the adjacent ghosts).  The 13-point biharmonic is solved on the remaining cells.
    """
    nx, ny = grid.nx, grid.ny
    G = grid.split_sides(gamma)
    P = np.zeros((nx + 2, ny + 2))
    known = np.zeros((nx + 2, ny + 2), dtype=bool)
    for col in (0, 1):
        P[col, 1:-1] = G["left"]
        P[-1 - col, 1:-1] = G["right"]
        known[col, 1:-1] = known[-1 - col, 1:-1] = True
    for row in (0, 1):
        P[1:-1, row] = G["bottom"]
        P[1:-1, -1 - row] = G["top"]
        known[1:-1, row] = known[1:-1, -1 - row] = True
    P[1, 1] = 0.5 * (G["left"][0] + G["bottom"][0])
    P[-2, 1] = 0.5 * (G["right"][0] + G["bottom"][-1])
    P[1, -2] = 0.5 * (G["left"][-1] + G["top"][0])
    P[-2, -2] = 0.5 * (G["right"][-1] + G["top"][-1])
    # ghosts next to a corner cell copy it, keeping the normal difference zero
    P[0, 1] = P[1, 0] = P[1, 1]
    P[-1, 1] = P[-2, 0] = P[-2, 1]
    P[0, -2] = P[1, -1] = P[1, -2]
    P[-1, -2] = P[-2, -1] = P[-2, -2]

    # padded -> interior five-point Laplacian, then interior -> inner Laplacian
    npad = (nx + 2) * (ny + 2)
    idx = np.arange(npad).reshape(nx + 2, ny + 2)
    rows, cols, vals = [], [], []
    cx, cy = 1.0 / grid.hx**2, 1.0 / grid.hy**2
    r = np.arange(nx * ny).reshape(nx, ny)
    for di, dj, w in ((0, 0, -2 * (cx + cy)), (1, 0, cx), (-1, 0, cx), (0, 1, cy), (0, -1, cy)):
        rows.append(r.ravel())
        cols.append(idx[1 + di : nx + 1 + di, 1 + dj : ny + 1 + dj].ravel())
        vals.append(np.full(nx * ny, w))
    L1 = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny, npad))
    inner = r[1:-1, 1:-1]
    rows, cols, vals = [], [], []
    ri = np.arange(inner.size).reshape(inner.shape)
    for di, dj, w in ((0, 0, -2 * (cx + cy)), (1, 0, cx), (-1, 0, cx), (0, 1, cy), (0, -1, cy)):
        rows.append(ri.ravel())
        cols.append(r[1 + di : nx - 1 + di, 1 + dj : ny - 1 + dj].ravel())
        vals.append(np.full(inner.size, w))
    L2 = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(inner.size, nx * ny))
    B = (L2 @ L1).tocsc()

    unknown = np.zeros((nx + 2, ny + 2), dtype=bool)
    unknown[2:-2, 2:-2] = True
    ucols = idx[unknown]
    kcols = idx[known]
    rhs = -(B[:, kcols] @ P[known])
    x, _ = linalg.solve(B[:, ucols], rhs, tol, "lift g2")
    P[unknown] = x
    return P


def lift_g2(bs: BoundarySpec, tol: float = linalg.DEFAULT_TOL) -> ScalarField:
    g = bs.grid
    gamma = bs.gamma
    if np.all(gamma == gamma[0]):
        out = ScalarField(g, np.full((g.nx + 2, g.ny + 2), gamma[0]), "g2", ghost="lift")
    else:
        out = ScalarField(g, _biharmonic_lift(g, gamma, tol), "g2", ghost="lift")
    dn = np.max(np.abs(boundary_normal_gradient(out)))
    out.meta["normal_derivative_max"] = float(dn)
    if dn > G2_NORMAL_WARN:
        warnings.warn(f"lift g2 has boundary normal derivative {dn:.3g} > {G2_NORMAL_WARN:g}", RuntimeWarning, stacklevel=2)
    return out


def lift_g1_g2(bs: BoundarySpec, tol: float = linalg.DEFAULT_TOL) -> tuple[ScalarField, ScalarField]:
    """Lifts with dg1/dnu = kappa, g2 = gamma and dg2/dnu = 0 on the boundary."""
    return lift_g1(bs, tol), lift_g2(bs, tol)


# --------------------------------------------------------------------------
# n_tilde = n exp(-c)


def transform_n(n: ScalarField, c: ScalarField) -> ScalarField:
    return n.with_interior(n.interior * np.exp(-c.interior), name="n_tilde")


def untransform_n(nt: ScalarField, c: ScalarField) -> ScalarField:
    return nt.with_interior(nt.interior * np.exp(c.interior), name="n")


def step_n_transformed(
    nt: ScalarField,
    u: FaceField,
    c: ScalarField,
    n: ScalarField,
    bs: BoundarySpec,
    dt: float,
    cfl: float = 0.9,
    tol: float = linalg.DEFAULT_TOL,
) -> ScalarField:
    """One step of nt_t = lap(nt) + div(nt grad c - u nt) + n c nt - 2 nt lap(c).

    Transport uses the velocity u - grad(c), upwinded.  On boundary faces the
    oxygen flux dc/dnu = kappa (gamma - c) carries n_tilde across the wall; it
    is balanced by the reaction terms, not by a closure.
    """
    g = nt.grid
    cr = fill_ghost_robin(c, bs)
    drift = chemotactic_velocity(cr)
    drift.x *= -1.0
    drift.y *= -1.0
    dcdn = boundary_normal_gradient(cr)
    # outward speed -dc/dnu on each boundary face
    S = g.split_sides(-dcdn)
    drift.x[0, :] = -S["left"]
    drift.x[-1, :] = S["right"]
    drift.y[:, 0] = -S["bottom"]
    drift.y[:, -1] = S["top"]
    check_cfl(dt, outflow_rate(u, drift), cfl, "transformed bacteria transport")

    q = nt.interior
    div = upwind_flux_divergence(q, u) + upwind_flux_divergence(q, drift)
    # boundary faces: Neumann ghost equals the interior value, so upwinding takes q either way
    div[0, :] += -drift.x[0, :] * q[0, :] / g.hx
    div[-1, :] += drift.x[-1, :] * q[-1, :] / g.hx
    div[:, 0] += -drift.y[:, 0] * q[:, 0] / g.hy
    div[:, -1] += drift.y[:, -1] * q[:, -1] / g.hy

    reaction = n.interior * c.interior * q - 2.0 * q * laplacian(cr).interior
    n_star = q - dt * div + dt * reaction
    x, res = linalg.implicit_neumann_heat(g, float(dt), tol).solve(linalg.flat(n_star))
    out = ScalarField.from_interior(g, linalg.unflat(x, g), "n_tilde")
    out.meta["residual"] = res
    return out


# --------------------------------------------------------------------------
# c_tilde = exp(g1) (g2 - c)


def transform_c(c: ScalarField, g1: ScalarField, g2: ScalarField) -> ScalarField:
    return c.with_interior(np.exp(g1.interior) * (g2.interior - c.interior), name="c_tilde")


def untransform_c(ct: ScalarField, g1: ScalarField, g2: ScalarField) -> ScalarField:
    return ct.with_interior(g2.interior - np.exp(-g1.interior) * ct.interior, name="c")


def step_c_transformed(
    ct: ScalarField,
    u: FaceField,
    n: ScalarField,
    c: ScalarField,
    g1: ScalarField,
    g2: ScalarField,
    dt: float,
    cfl: float = 0.9,
    tol: float = linalg.DEFAULT_TOL,
) -> ScalarField:
    """One IMEX step of the homogeneous-Neumann equation for c_tilde.

        ct_t = lap(ct) - 2 grad(g1).grad(ct) + (|grad g1|^2 - lap g1) ct
               + exp(g1) (u.grad(c) + n g2 - lap g2) - n ct

    (the consumption term exp(g1) n c is split as exp(g1) n g2 - n ct).
    Diffusion and -n ct are implicit; u.grad(c) uses the same upwind flux as
    :func:`step_c`, applied to the current c.
    """
    g = ct.grid
    check_cfl(dt, outflow_rate(u), cfl, "transformed oxygen advection")
    ctn = fill_ghost_neumann(ct)
    g1x, g1y = cell_gradient(g1)
    ctx, cty = cell_gradient(ctn)
    lap_g1 = laplacian(g1).interior
    lap_g2 = laplacian(g2).interior
    eg1 = np.exp(g1.interior)
    q = ct.interior
    explicit = (
        -2.0 * (g1x * ctx + g1y * cty)
        + (g1x * g1x + g1y * g1y - lap_g1) * q
        + eg1 * (upwind_flux_divergence(c.interior, u) + n.interior * g2.interior - lap_g2)
    )
    rhs = linalg.flat(q + dt * explicit)
    A = sp.identity(g.size) - dt * linalg.neumann_laplacian(g) + sp.diags(dt * linalg.flat(n.interior))
    x, res = linalg.solve(A, rhs, tol, "transformed oxygen implicit step")
    out = ScalarField.from_interior(g, linalg.unflat(x, g), "c_tilde")
    out.meta["residual"] = res
    return out
