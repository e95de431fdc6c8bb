"""
Per-step diagnostics for the a priori estimates and the run report.

Only constant-free consequences are checked: the maximum principle for c,
conservation of bacterial mass, monotonicity of the weighted energy when the
boundary is impermeable to oxygen (kappa = 0), the sign of the vorticity
growth residual, positivity, and plain finiteness of every norm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from cesim.euler import FlowState, velocity_divergence
from cesim.grid import (
    BoundarySpec,
    ScalarField,
    boundary_integral,
    fill_ghost_robin,
    h1_seminorm,
    integral,
    lq_norm,
    one_sided_gradient,
)

THETA_RATE = 12.0
BLOWUP_THRESHOLD = 1e12


def theta(c):
    """Weight exp(12 c^2) of the bacterial energy."""
    return np.exp(THETA_RATE * np.square(c))


def theta_inequality_gap(c):
    """theta''/4 - 5 theta'^2/theta - theta - theta'; positive for 0 <= c < 0.0386."""
    th = theta(c)
    d1 = 24.0 * c * th
    d2 = (24.0 + 576.0 * np.square(c)) * th
    return d2 / 4.0 - 5.0 * d1 * d1 / th - th - d1


def theta_gap_ratio(c):
    """Closed form of theta_inequality_gap(c) / theta(c)."""
    return 5.0 - 2736.0 * np.square(c) - 24.0 * c


def weighted_energy(n: ScalarField, c: ScalarField) -> float:
    return integral(theta(c.interior) * np.square(n.interior), n.grid)


@dataclass
class MonitorSample:
    t: float
    step: int = 0
    dt: float = 0.0
    c_max: float = 0.0
    c_min: float = 0.0
    n_min: float = 0.0
    n_mass: float = 0.0
    weighted_energy: float = 0.0
    omega_l2: float = 0.0
    grad_c_l2: float = 0.0
    grad_n_l2: float = 0.0
    n_l2: float = 0.0
    n_l4: float = 0.0
    n_l8: float = 0.0
    n_max: float = 0.0
    u_l2: float = 0.0
    u_h1: float = 0.0
    grad_u_l4: float = 0.0
    div_u_max: float = 0.0
    n_t_l2: float = 0.0
    u_t_l2: float = 0.0
    c_energy_residual: float = 0.0
    gronwall_residual: float = 0.0
    theta_gap_min: float = 0.0
    c_bound: float = 0.0
    kappa_max: float = 0.0
    blowup: bool = False

    def as_row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "blowup":
                out.append("1" if v else "0")
            elif isinstance(v, int) and not isinstance(v, bool):
                out.append(str(v))
            else:
                out.append(format(float(v), ".17g"))
        return out


COLUMNS = [f.name for f in fields(MonitorSample)]
NORM_COLUMNS = (
    "weighted_energy", "omega_l2", "grad_c_l2", "grad_n_l2", "n_l2", "n_l4", "n_l8",
    "n_max", "u_l2", "u_h1", "grad_u_l4", "c_max", "n_mass",
)


@dataclass
class MonitorSeries:
    samples: list[MonitorSample] = field(default_factory=list)

    def append(self, s: MonitorSample) -> None:
        if self.samples and not s.t > self.samples[-1].t:
            raise ValueError(f"sample times must increase ({s.t} after {self.samples[-1].t})")
        self.samples.append(s)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for s in self.samples:
                w.writerow(s.as_row())

    @classmethod
    def read_csv(cls, path: str | Path) -> MonitorSeries:
        series = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                kw = {}
                for f in fields(MonitorSample):
                    raw = row[f.name]
                    if f.name == "blowup":
                        kw[f.name] = raw.strip() not in ("0", "False", "false", "")
                    elif f.name == "step":
                        kw[f.name] = int(raw)
                    else:
                        kw[f.name] = float(raw)
                series.samples.append(MonitorSample(**kw))
        return series


def _velocity_norms(u) -> tuple[float, float, float]:
    g = u.grid
    ucx, ucy = u.cell_average()
    l2 = math.sqrt(float(np.sum(ucx * ucx + ucy * ucy)) * g.cell_area)
    dux, duy = one_sided_gradient(ucx, g)
    dvx, dvy = one_sided_gradient(ucy, g)
    gsq = dux * dux + duy * duy + dvx * dvx + dvy * dvy
    grad_l2 = math.sqrt(float(np.sum(gsq)) * g.cell_area)
    grad_l4 = float(np.sum(gsq * gsq) * g.cell_area) ** 0.25
    return l2, math.sqrt(l2 * l2 + grad_l2 * grad_l2), grad_l4


def gronwall_residual(prev: MonitorSample, cur: MonitorSample, grad_phi_max: float) -> float:
    """(||w^{k+1}|| - ||w^k||)/dt - ||grad n^k|| max|grad phi|; nonpositive in the exact flow."""
    dt = cur.t - prev.t
    return (cur.omega_l2 - prev.omega_l2) / dt - prev.grad_n_l2 * grad_phi_max


def grad_phi_max(phi: ScalarField) -> float:
    gx, gy = one_sided_gradient(phi.interior, phi.grid)
    return float(np.sqrt(np.max(gx * gx + gy * gy)))


def c_energy_residual(
    c_old: ScalarField, c_new: ScalarField, n_old: ScalarField, bs: BoundarySpec, dt: float
) -> float:
    """Discrete residual of 1/2 d/dt ||c||^2 + ||grad c||^2 + int n c^2 - int_bdry kappa (gamma - c) c."""
    g = c_new.grid
    cr = fill_ghost_robin(c_new, bs)
    cface = 0.5 * (np.concatenate([cr.values[0, 1:-1], cr.values[-1, 1:-1], cr.values[1:-1, 0], cr.values[1:-1, -1]])
                   + np.concatenate([cr.values[1, 1:-1], cr.values[-2, 1:-1], cr.values[1:-1, 1], cr.values[1:-1, -2]]))
    ddt = 0.5 * (integral(np.square(c_new.interior), g) - integral(np.square(c_old.interior), g)) / dt
    boundary = boundary_integral(g, bs.kappa * (bs.gamma - cface) * cface)
    return ddt + h1_seminorm(c_new) ** 2 + integral(n_old.interior * np.square(c_new.interior), g) - boundary


def sample_state(
    t: float,
    step: int,
    dt: float,
    n: ScalarField,
    c: ScalarField,
    flow: FlowState,
    bs: BoundarySpec,
    c_bound: float,
    prev: MonitorSample | None = None,
    gphi: float = 0.0,
    n_prev: ScalarField | None = None,
    c_prev: ScalarField | None = None,
    flow_prev: FlowState | None = None,
) -> MonitorSample:
    """Evaluate every monitored quantity for the state at time ``t``."""
    g = n.grid
    nv, cv = n.interior, c.interior
    with np.errstate(all="ignore"):
        u_l2, u_h1, grad_u_l4 = _velocity_norms(flow.u)
        s = MonitorSample(
            t=float(t),
            step=int(step),
            dt=float(dt),
            c_max=float(cv.max()),
            c_min=float(cv.min()),
            n_min=float(nv.min()),
            n_mass=integral(nv, g),
            weighted_energy=weighted_energy(n, c),
            omega_l2=lq_norm(flow.omega, 2),
            grad_c_l2=h1_seminorm(c),
            grad_n_l2=h1_seminorm(n),
            n_l2=lq_norm(n, 2),
            n_l4=lq_norm(n, 4),
            n_l8=lq_norm(n, 8),
            n_max=lq_norm(n, math.inf),
            u_l2=u_l2,
            u_h1=u_h1,
            grad_u_l4=grad_u_l4,
            div_u_max=float(np.max(np.abs(velocity_divergence(flow.u)))),
            theta_gap_min=float(np.min(theta_inequality_gap(cv))),
            c_bound=float(c_bound),
            kappa_max=float(np.max(bs.kappa)),
        )
        if prev is not None and dt > 0:
            s.gronwall_residual = gronwall_residual(prev, s, gphi)
            if n_prev is not None:
                s.n_t_l2 = lq_norm(nv - n_prev.interior, 2, g) / dt
            if c_prev is not None:
                s.c_energy_residual = c_energy_residual(c_prev, c, n_prev if n_prev is not None else n, bs, dt)
            if flow_prev is not None:
                du = flow.u.x - flow_prev.u.x
                dv = flow.u.y - flow_prev.u.y
                s.u_t_l2 = math.sqrt((float(np.sum(du * du)) + float(np.sum(dv * dv))) * g.cell_area) / dt
    s.blowup = detect_blowup(s)
    return s


def detect_blowup(s: MonitorSample) -> bool:
    for name in NORM_COLUMNS:
        v = getattr(s, name)
        if not math.isfinite(v) or abs(v) > BLOWUP_THRESHOLD:
            return True
    return False


# --------------------------------------------------------------------------
# run report


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class Report:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<24s} {c.detail}" for c in self.checks]

    def __str__(self):
        return "\n".join(self.lines() + [f"overall: {'PASS' if self.passed else 'FAIL'}"])


@dataclass
class CheckTolerances:
    c_max_rel: float = 1e-8
    mass_rel: float = 1e-8
    energy_rel: float = 1e-4
    gronwall: float = 1e-3
    positivity: float = 1e-14


def check_run(series: MonitorSeries, tol: CheckTolerances | None = None) -> Report:
    """Pass/fail summary of a (possibly partial) monitor series."""
    tol = tol or CheckTolerances()
    if len(series) == 0:
        return Report([CheckResult("nonempty", False, "series has no samples")])
    checks = []

    blow = any(s.blowup for s in series.samples)
    checks.append(CheckResult("no_blowup", not blow, "blow-up flag set" if blow else "flag never set"))

    finite = all(math.isfinite(getattr(s, c)) for s in series.samples for c in COLUMNS if c != "blowup")
    checks.append(CheckResult("finite", finite, "all entries finite" if finite else "non-finite entry found"))

    c_max = series.column("c_max")
    bound = series.column("c_bound")
    limit = bound * (1.0 + tol.c_max_rel)
    ok = bool(np.all(c_max <= limit))
    checks.append(CheckResult("max_principle", ok, f"max c = {np.nanmax(c_max):.17g}, bound {np.nanmax(bound):.17g}"))

    mass = series.column("n_mass")
    m0 = mass[0]
    drift = float(np.nanmax(np.abs(mass - m0)) / abs(m0)) if m0 != 0 else float(np.nanmax(np.abs(mass)))
    checks.append(CheckResult("mass_conservation", drift <= tol.mass_rel, f"relative drift {drift:.3e}"))

    mins = np.minimum(series.column("n_min"), series.column("c_min"))
    ok = bool(np.nanmin(mins) >= -tol.positivity)
    checks.append(CheckResult("positivity", ok, f"min(n, c) = {np.nanmin(mins):.3e}"))

    if np.all(series.column("kappa_max") == 0.0):
        E = series.column("weighted_energy")
        inc = weighted_energy_increments(E)
        worst = float(inc.max()) if inc.size else 0.0
        checks.append(CheckResult("energy_monotone", worst <= tol.energy_rel, f"worst relative increase {worst:.3e}"))
    else:
        checks.append(CheckResult("energy_monotone", True, "skipped (kappa != 0)"))

    gr = series.column("gronwall_residual")[1:]
    worst = float(np.max(np.maximum(gr, 0.0))) if gr.size else 0.0
    checks.append(CheckResult("gronwall", worst <= tol.gronwall, f"max positive residual {worst:.3e}"))
    return Report(checks)


def weighted_energy_increments(E: np.ndarray) -> np.ndarray:
    """Positive part of the relative per-step change of the weighted energy."""
    if E.size < 2:
        return np.zeros(0)
    denom = np.where(E[:-1] != 0, np.abs(E[:-1]), 1.0)
    return np.maximum(np.diff(E) / denom, 0.0)
