"""Sparse matrices for the implicit parts of the schemes and checked solves.

Unknowns are interior cells flattened in C order: index ``i * ny + j``.
Solves use a sparse LU factorization (SuperLU) and verify the relative
residual afterwards, so every returned solution carries its residual.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from cesim.errors import SolverError
from cesim.grid import Grid, dirichlet_closure, neumann_closure

DEFAULT_TOL = 1e-10


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    # interior couplings only; boundary closures are added per face
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


@lru_cache(maxsize=32)
def neumann_laplacian(grid: Grid) -> sp.csr_matrix:
    """Five-point Laplacian with zero flux through every boundary face."""
    Ix, Iy = sp.identity(grid.nx, format="csr"), sp.identity(grid.ny, format="csr")
    return (sp.kron(_second_difference(grid.nx, grid.hx), Iy) + sp.kron(Ix, _second_difference(grid.ny, grid.hy))).tocsr()


def boundary_cell_index(grid: Grid) -> np.ndarray:
    c = grid.bface_cell
    return c[:, 0] * grid.ny + c[:, 1]


def closure_diagonal(grid: Grid, a: np.ndarray) -> np.ndarray:
    """Diagonal correction of the Laplacian for ghost closures with slope ``a``."""
    d = np.zeros(grid.size)
    np.add.at(d, boundary_cell_index(grid), (np.asarray(a) - 1.0) / grid.bface_spacing**2)
    return d


def closure_rhs(grid: Grid, b: np.ndarray) -> np.ndarray:
    """Source contributed to the Laplacian by closure offsets ``b``."""
    r = np.zeros(grid.size)
    np.add.at(r, boundary_cell_index(grid), np.asarray(b) / grid.bface_spacing**2)
    return r


def laplacian_matrix(grid: Grid, a: np.ndarray) -> sp.csr_matrix:
    """Laplacian with ghost = a * interior + b folded in (``b`` goes to :func:`closure_rhs`)."""
    return (neumann_laplacian(grid) + sp.diags(closure_diagonal(grid, a))).tocsr()


class Factorized:
    """LU factorization that checks the residual of every solve."""

    def __init__(self, A: sp.spmatrix, tol: float = DEFAULT_TOL, label: str = "linear system"):
        self.A = sp.csc_matrix(A)
        self.tol = tol
        self.label = label
        self._lu = spla.splu(self.A)

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, float]:
        x = self._lu.solve(rhs)
        res = relative_residual(self.A, x, rhs)
        if not np.isfinite(res) or res > self.tol:
            # one step of iterative refinement before giving up
            x = x + self._lu.solve(rhs - self.A @ x)
            res = relative_residual(self.A, x, rhs)
            if not np.isfinite(res) or res > self.tol:
                raise SolverError(f"{self.label}: relative residual {res:.3e} exceeds {self.tol:.1e}", res)
        return x, res


def relative_residual(A, x, b) -> float:
    bn = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return float(r / bn) if bn > 0 else float(r)


def solve(A: sp.spmatrix, rhs: np.ndarray, tol: float = DEFAULT_TOL, label: str = "linear system"):
    """One-shot factorize-and-solve returning (solution, relative residual)."""
    return Factorized(A, tol, label).solve(rhs)


@lru_cache(maxsize=16)
def dirichlet_poisson(grid: Grid, tol: float = DEFAULT_TOL) -> Factorized:
    """Factorized -Laplacian with zero face values on the whole boundary."""
    a, _ = dirichlet_closure(grid)
    return Factorized(-laplacian_matrix(grid, a), tol, "streamfunction Poisson")


@lru_cache(maxsize=16)
def implicit_neumann_heat(grid: Grid, dt: float, tol: float = DEFAULT_TOL) -> Factorized:
    """Factorized I - dt * Laplacian with zero-flux boundaries."""
    a, _ = neumann_closure(grid)
    return Factorized(sp.identity(grid.size) - dt * laplacian_matrix(grid, a), tol, "implicit diffusion")


@lru_cache(maxsize=16)
def neumann_pressure_system(grid: Grid, tol: float = DEFAULT_TOL) -> Factorized:
    """Neumann Laplacian bordered with a mean-zero constraint row and column."""
    L = neumann_laplacian(grid)
    ones = sp.csr_matrix(np.ones((1, grid.size)))
    K = sp.bmat([[L, ones.T], [ones, None]], format="csc")
    return Factorized(K, tol, "pressure Poisson")


def flat(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr).ravel()


def unflat(vec: np.ndarray, grid: Grid) -> np.ndarray:
    return vec.reshape(grid.shape)
