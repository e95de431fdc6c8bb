"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class CesimError(Exception):
    """Base class for all simulator errors."""


class GhostFillError(CesimError):
    """An operator needing ghost values was given a field whose ghosts are unset."""


class SolverError(CesimError):
    """A linear solve missed its residual target."""

    def __init__(self, message: str, residual: float, step: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class CFLError(CesimError):
    """The requested time step exceeds the explicit stability limit."""

    def __init__(self, message: str, dt_admissible: float):
        super().__init__(message)
        self.dt_admissible = dt_admissible


class MeshResolutionError(CesimError):
    """A boundary closure degenerates; the mesh must be refined."""


class ConfigError(CesimError):
    """Invalid configuration document or value."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line
