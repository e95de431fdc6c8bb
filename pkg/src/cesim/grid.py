"""
Uniform cell-centered rectangular grid, fields, and discrete calculus.

Layout conventions used throughout the package:

    * Cell (i, j) has center ((i + 1/2) hx, (j + 1/2) hy), i along x, j along y.
    * Scalar fields store an (nx + 2, ny + 2) array; index 0 and -1 along each
      axis are the ghost layer, ``values[1:-1, 1:-1]`` is the interior.
    * Face fields store normal components: ``x`` on the (nx + 1, ny) x-faces,
      ``y`` on the (nx, ny + 1) y-faces.  Index 0 / -1 are boundary faces.
    * Boundary faces are enumerated side by side in the order
      left, right, bottom, top; each side runs along increasing j (left/right)
      or increasing i (bottom/top).

Every boundary condition is expressed as an affine ghost closure
``ghost = a * interior + b`` per boundary face.  The same (a, b) pair drives
both the explicit ghost fills here and the implicit matrices in
:mod:`cesim.linalg`, so the two never disagree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from cesim.errors import GhostFillError, MeshResolutionError

SIDES = ("left", "right", "bottom", "top")
_NORMALS = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "bottom": (0.0, -1.0), "top": (0.0, 1.0)}


@dataclass(frozen=True)
class Grid:
    """Rectangle [0, Lx] x [0, Ly] split into nx x ny equal cells."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs nx, ny >= 4, got {self.nx} x {self.ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain extents must be positive")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def h_min(self) -> float:
        return min(self.hx, self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    @cached_property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    @cached_property
    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior cell centers as (nx, ny) arrays."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def padded_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell centers including the ghost layer, (nx + 2, ny + 2) arrays."""
        xp = (np.arange(-1, self.nx + 1) + 0.5) * self.hx
        yp = (np.arange(-1, self.ny + 1) + 0.5) * self.hy
        return np.meshgrid(xp, yp, indexing="ij")

    @cached_property
    def side_slices(self) -> dict[str, slice]:
        counts = {"left": self.ny, "right": self.ny, "bottom": self.nx, "top": self.nx}
        out, start = {}, 0
        for side in SIDES:
            out[side] = slice(start, start + counts[side])
            start += counts[side]
        return out

    @property
    def n_boundary_faces(self) -> int:
        return 2 * (self.nx + self.ny)

    @cached_property
    def bface_cell(self) -> np.ndarray:
        """Interior (i, j) index of the cell owning each boundary face."""
        jj, ii = np.arange(self.ny), np.arange(self.nx)
        return np.concatenate(
            [
                np.stack([np.zeros_like(jj), jj], axis=1),
                np.stack([np.full_like(jj, self.nx - 1), jj], axis=1),
                np.stack([ii, np.zeros_like(ii)], axis=1),
                np.stack([ii, np.full_like(ii, self.ny - 1)], axis=1),
            ]
        )

    @cached_property
    def bface_normal(self) -> np.ndarray:
        return np.concatenate(
            [np.tile(_NORMALS[s], (self.side_slices[s].stop - self.side_slices[s].start, 1)) for s in SIDES]
        )

    @cached_property
    def bface_mid(self) -> np.ndarray:
        return np.concatenate(
            [
                np.stack([np.zeros(self.ny), self.y], axis=1),
                np.stack([np.full(self.ny, self.Lx), self.y], axis=1),
                np.stack([self.x, np.zeros(self.nx)], axis=1),
                np.stack([self.x, np.full(self.nx, self.Ly)], axis=1),
            ]
        )

    @cached_property
    def bface_length(self) -> np.ndarray:
        return np.concatenate(
            [np.full(self.ny, self.hy), np.full(self.ny, self.hy), np.full(self.nx, self.hx), np.full(self.nx, self.hx)]
        )

    @cached_property
    def bface_spacing(self) -> np.ndarray:
        """Center-to-ghost distance across each boundary face."""
        return np.concatenate(
            [np.full(self.ny, self.hx), np.full(self.ny, self.hx), np.full(self.nx, self.hy), np.full(self.nx, self.hy)]
        )

    @property
    def boundary_faces(self) -> list[tuple[tuple[int, int], tuple[float, float], tuple[float, float]]]:
        """(cell index, outward unit normal, face midpoint) for every boundary face."""
        return [
            (tuple(int(v) for v in c), tuple(float(v) for v in nrm), tuple(float(v) for v in m))
            for c, nrm, m in zip(self.bface_cell, self.bface_normal, self.bface_mid)
        ]

    def split_sides(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        return {s: flat[self.side_slices[s]] for s in SIDES}


@dataclass
class ScalarField:
    """Cell-centered scalar with one ghost layer.

    ``ghost`` names the closure last used to fill the ghost layer, or is
    ``None`` when the ghosts are stale.
    """

    grid: Grid
    values: np.ndarray
    name: str = ""
    ghost: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = (self.grid.nx + 2, self.grid.ny + 2)
        if self.values.shape != expected:
            raise ValueError(f"field array shape {self.values.shape} does not match grid {expected}")

    @classmethod
    def zeros(cls, grid: Grid, name: str = "") -> ScalarField:
        return cls(grid, np.zeros((grid.nx + 2, grid.ny + 2)), name)

    @classmethod
    def from_interior(cls, grid: Grid, arr, name: str = "") -> ScalarField:
        arr = np.asarray(arr, dtype=float)
        if arr.shape != grid.shape:
            raise ValueError(f"interior shape {arr.shape} does not match grid {grid.shape}")
        values = np.zeros((grid.nx + 2, grid.ny + 2))
        values[1:-1, 1:-1] = arr
        return cls(grid, values, name)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable, name: str = "") -> ScalarField:
        """Sample ``fn(x, y)`` at every center, ghosts included (ghost kind ``"exact"``)."""
        X, Y = grid.padded_centers
        values = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), X.shape).copy()
        return cls(grid, values, name, ghost="exact")

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def copy(self, name: str | None = None) -> ScalarField:
        return ScalarField(self.grid, self.values.copy(), self.name if name is None else name, self.ghost, dict(self.meta))

    def with_interior(self, arr: np.ndarray, name: str | None = None) -> ScalarField:
        return ScalarField.from_interior(self.grid, arr, self.name if name is None else name)


@dataclass
class FaceField:
    """Normal components of a vector field on cell faces."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        g = self.grid
        if self.x.shape != (g.nx + 1, g.ny) or self.y.shape != (g.nx, g.ny + 1):
            raise ValueError(f"face arrays {self.x.shape}, {self.y.shape} do not match grid {g.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> FaceField:
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def boundary_normal(self) -> np.ndarray:
        """Outward normal component on each boundary face (canonical order)."""
        return np.concatenate([-self.x[0, :], self.x[-1, :], -self.y[:, 0], self.y[:, -1]])

    def cell_average(self) -> tuple[np.ndarray, np.ndarray]:
        return 0.5 * (self.x[1:, :] + self.x[:-1, :]), 0.5 * (self.y[:, 1:] + self.y[:, :-1])

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.x)), np.max(np.abs(self.y))))


@dataclass
class BoundarySpec:
    """Robin exchange rate ``kappa`` and ambient level ``gamma`` on each boundary face."""

    grid: Grid
    kappa: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        n = self.grid.n_boundary_faces
        self.kappa = np.broadcast_to(np.asarray(self.kappa, dtype=float), (n,)).copy()
        self.gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (n,)).copy()
        for label, arr in (("kappa", self.kappa), ("gamma", self.gamma)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{label} must be finite on every boundary face")
            if np.any(arr < 0):
                raise ValueError(f"{label} must be nonnegative on every boundary face (min {arr.min():g})")

    @classmethod
    def constant(cls, grid: Grid, kappa: float = 0.0, gamma: float = 0.0) -> BoundarySpec:
        return cls(grid, np.full(grid.n_boundary_faces, kappa), np.full(grid.n_boundary_faces, gamma))

    @classmethod
    def from_functions(cls, grid: Grid, kappa_fn: Callable, gamma_fn: Callable) -> BoundarySpec:
        xm, ym = grid.bface_mid[:, 0], grid.bface_mid[:, 1]
        kappa = np.broadcast_to(np.asarray(kappa_fn(xm, ym), dtype=float), xm.shape)
        gamma = np.broadcast_to(np.asarray(gamma_fn(xm, ym), dtype=float), xm.shape)
        return cls(grid, kappa, gamma)

    @property
    def kappa_is_zero(self) -> bool:
        return bool(np.all(self.kappa == 0.0))


# --------------------------------------------------------------------------
# ghost closures


def apply_closure(f: ScalarField, a: np.ndarray, b: np.ndarray, kind: str) -> ScalarField:
    """Fill the ghost layer with ``ghost = a * interior + b`` on every boundary face.

    Corner ghosts average the two edge closures extended into the corner.
    """
    g = f.grid
    out = f.copy()
    v = out.values
    A, B = g.split_sides(np.asarray(a, dtype=float)), g.split_sides(np.asarray(b, dtype=float))
    v[0, 1:-1] = A["left"] * v[1, 1:-1] + B["left"]
    v[-1, 1:-1] = A["right"] * v[-2, 1:-1] + B["right"]
    v[1:-1, 0] = A["bottom"] * v[1:-1, 1] + B["bottom"]
    v[1:-1, -1] = A["top"] * v[1:-1, -2] + B["top"]
    v[0, 0] = 0.5 * ((A["left"][0] * v[1, 0] + B["left"][0]) + (A["bottom"][0] * v[0, 1] + B["bottom"][0]))
    v[-1, 0] = 0.5 * ((A["right"][0] * v[-2, 0] + B["right"][0]) + (A["bottom"][-1] * v[-1, 1] + B["bottom"][-1]))
    v[0, -1] = 0.5 * ((A["left"][-1] * v[1, -1] + B["left"][-1]) + (A["top"][0] * v[0, -2] + B["top"][0]))
    v[-1, -1] = 0.5 * ((A["right"][-1] * v[-2, -1] + B["right"][-1]) + (A["top"][-1] * v[-1, -2] + B["top"][-1]))
    out.ghost = kind
    return out


def boundary_interior_values(f: ScalarField) -> np.ndarray:
    """Interior value adjacent to each boundary face (canonical order)."""
    v = f.values
    return np.concatenate([v[1, 1:-1], v[-2, 1:-1], v[1:-1, 1], v[1:-1, -2]])


def boundary_ghost_values(f: ScalarField) -> np.ndarray:
    v = f.values
    return np.concatenate([v[0, 1:-1], v[-1, 1:-1], v[1:-1, 0], v[1:-1, -1]])


def neumann_closure(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    n = grid.n_boundary_faces
    return np.ones(n), np.zeros(n)


def dirichlet_closure(grid: Grid, value=0.0) -> tuple[np.ndarray, np.ndarray]:
    """Face-midpoint Dirichlet data: (ghost + interior) / 2 = value."""
    n = grid.n_boundary_faces
    return -np.ones(n), 2.0 * np.broadcast_to(np.asarray(value, dtype=float), (n,))


def robin_closure(bs: BoundarySpec) -> tuple[np.ndarray, np.ndarray]:
    """Closure for dc/dnu = kappa (gamma - c) with trapezoidal face value.

    Solves (c_g - c_i)/h = kappa (gamma - (c_g + c_i)/2) for c_g.
    """
    if np.any(bs.kappa < 0):
        raise ValueError("kappa must be nonnegative")
    h = bs.grid.bface_spacing
    denom = 1.0 / h + 0.5 * bs.kappa
    return (1.0 / h - 0.5 * bs.kappa) / denom, bs.kappa * bs.gamma / denom


def fill_ghost_neumann(f: ScalarField) -> ScalarField:
    return apply_closure(f, *neumann_closure(f.grid), kind="neumann")


def fill_ghost_dirichlet(f: ScalarField, value=0.0) -> ScalarField:
    return apply_closure(f, *dirichlet_closure(f.grid, value), kind="dirichlet")


def fill_ghost_robin(c: ScalarField, bs: BoundarySpec) -> ScalarField:
    return apply_closure(c, *robin_closure(bs), kind="robin")


def fill_ghost_extrapolate(f: ScalarField) -> ScalarField:
    """Quadratic extrapolation into the ghost layer (exact for quadratics)."""
    out = f.copy()
    v = out.values
    v[0, :] = 3.0 * v[1, :] - 3.0 * v[2, :] + v[3, :]
    v[-1, :] = 3.0 * v[-2, :] - 3.0 * v[-3, :] + v[-4, :]
    v[:, 0] = 3.0 * v[:, 1] - 3.0 * v[:, 2] + v[:, 3]
    v[:, -1] = 3.0 * v[:, -2] - 3.0 * v[:, -3] + v[:, -4]
    out.ghost = "extrapolate"
    return out


def boundary_normal_gradient(f: ScalarField) -> np.ndarray:
    """(ghost - interior) / h across each boundary face; needs filled ghosts."""
    require_ghosts(f)
    return (boundary_ghost_values(f) - boundary_interior_values(f)) / f.grid.bface_spacing


def fill_ghost_chemotactic_noflux(n: ScalarField, c: ScalarField) -> ScalarField:
    """Ghosts for n such that (grad n - n grad c) . nu = 0 on every boundary face.

    ``c`` must carry Robin ghosts.  With g = dc/dnu at the face and
    n_face = (n_g + n_i)/2, solves (n_g - n_i)/h = n_face g.
    """
    if c.ghost != "robin":
        raise GhostFillError("chemotactic no-flux closure needs c with Robin ghosts")
    h = n.grid.bface_spacing
    g = boundary_normal_gradient(c)
    denom = 1.0 / h - 0.5 * g
    if np.any(denom <= 0):
        raise MeshResolutionError(
            f"boundary oxygen gradient {np.max(g):.3g} too large for h={h.min():.3g}; refine the mesh"
        )
    return apply_closure(n, (1.0 / h + 0.5 * g) / denom, np.zeros_like(h), kind="chemotactic")


def require_ghosts(f: ScalarField) -> None:
    if f.ghost is None:
        raise GhostFillError(f"field {f.name!r} has no ghost fill; apply a boundary closure first")


# --------------------------------------------------------------------------
# difference operators


def gradient_faces(f: ScalarField) -> FaceField:
    """Two-point normal differences on all faces (boundary faces read ghosts)."""
    require_ghosts(f)
    g, v = f.grid, f.values
    gx = (v[1:, 1:-1] - v[:-1, 1:-1]) / g.hx
    gy = (v[1:-1, 1:] - v[1:-1, :-1]) / g.hy
    return FaceField(g, gx, gy)


def interior_face_gradient(arr: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Differences across interior faces only: shapes (nx-1, ny), (nx, ny-1)."""
    return np.diff(arr, axis=0) / grid.hx, np.diff(arr, axis=1) / grid.hy


def divergence_faces(F: FaceField) -> ScalarField:
    g = F.grid
    div = (F.x[1:, :] - F.x[:-1, :]) / g.hx + (F.y[:, 1:] - F.y[:, :-1]) / g.hy
    return ScalarField.from_interior(g, div)


def laplacian(f: ScalarField) -> ScalarField:
    """Five-point Laplacian, computed as divergence of the face gradient."""
    out = divergence_faces(gradient_faces(f))
    out.name = f"lap({f.name})" if f.name else ""
    return out


def cell_gradient(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Centered cell gradient using the ghost layer."""
    require_ghosts(f)
    g, v = f.grid, f.values
    return (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * g.hx), (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * g.hy)


def one_sided_gradient(arr: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Centered interior gradient with second-order one-sided edges; ignores ghosts."""
    return np.gradient(arr, grid.hx, axis=0, edge_order=2), np.gradient(arr, grid.hy, axis=1, edge_order=2)


# --------------------------------------------------------------------------
# norms and integrals


def lq_norm(f: ScalarField | np.ndarray, q: float = 2.0, grid: Grid | None = None) -> float:
    """Midpoint-rule L^q norm over interior cells; ``q=inf`` gives the interior max."""
    if isinstance(f, ScalarField):
        arr, grid = f.interior, f.grid
    else:
        arr = np.asarray(f)
    if q < 1:
        raise ValueError(f"L^q norm needs q >= 1, got {q}")
    a = np.abs(arr)
    if np.isinf(q):
        return float(a.max())
    if q == 1:
        return float(a.sum() * grid.cell_area)
    if q == 2:
        return float(np.sqrt(np.sum(a * a) * grid.cell_area))
    m = a.max()
    if m == 0 or not np.isfinite(m):
        return float(m)
    return float(m * (np.sum((a / m) ** q) * grid.cell_area) ** (1.0 / q))


def h1_seminorm(f: ScalarField | np.ndarray, grid: Grid | None = None) -> float:
    """Discrete ||grad f||_2 from differences across interior faces."""
    if isinstance(f, ScalarField):
        arr, grid = f.interior, f.grid
    else:
        arr = np.asarray(f)
    gx, gy = interior_face_gradient(arr, grid)
    return float(np.sqrt((np.sum(gx * gx) + np.sum(gy * gy)) * grid.cell_area))


def boundary_integral(grid: Grid, g: np.ndarray) -> float:
    """Sum of per-face values times face length."""
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.n_boundary_faces,):
        raise ValueError(f"expected {grid.n_boundary_faces} boundary values, got {g.shape}")
    return float(np.sum(g * grid.bface_length))


def integral(f: ScalarField | np.ndarray, grid: Grid | None = None) -> float:
    if isinstance(f, ScalarField):
        arr, grid = f.interior, f.grid
    else:
        arr = np.asarray(f)
    return float(np.sum(arr) * grid.cell_area)
