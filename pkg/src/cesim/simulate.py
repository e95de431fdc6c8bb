"""
Coupled time loop for the chemotaxis-Euler system.

Each step uses first-order splitting on the start-of-step state: the flow is
advanced first, then oxygen, then bacteria, all transported by the
start-of-step velocity and (for the bacteria drift) the start-of-step oxygen.
The step size is the largest CFL-admissible one, capped by ``dt_max`` and
shortened so that snapshot times are hit exactly.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from cesim import chemotaxis as chem
from cesim import euler, monitors
from cesim.config import SimConfig
from cesim.errors import CesimError, CFLError, SolverError
from cesim.expressions import parse_expression
from cesim.grid import BoundarySpec, Grid, ScalarField, fill_ghost_robin
from cesim.monitors import MonitorSample, MonitorSeries, Report
from cesim.snapshots import read_snapshot, write_snapshot

log = logging.getLogger(__name__)

COMPLETED, BLOWUP, SOLVER_FAILURE = "completed", "blowup", "solver_failure"


@dataclass
class SimState:
    t: float
    step: int
    n: ScalarField
    c: ScalarField
    flow: euler.FlowState


@dataclass
class Model:
    """Everything a step needs besides the evolving state."""

    grid: Grid
    bs: BoundarySpec
    phi: ScalarField
    formulation: str = "direct"
    frozen_flow: bool = False
    cfl: float = 0.9
    tol: float = 1e-10
    lifts: tuple[ScalarField, ScalarField] | None = None

    @property
    def grad_phi_max(self) -> float:
        return monitors.grad_phi_max(self.phi)


@dataclass
class RunResult:
    series: MonitorSeries
    status: str
    report: Report
    state: SimState
    out_dir: Path | None = None
    error: Exception | None = None
    snapshots: list[Path] = field(default_factory=list)


def build_model(cfg: SimConfig) -> Model:
    grid = Grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly)
    bs = BoundarySpec.from_functions(grid, parse_expression(cfg.kappa), parse_expression(cfg.gamma))
    X, Y = grid.centers
    phi = ScalarField.from_interior(grid, parse_expression(cfg.phi)(X, Y), "phi")
    model = Model(grid, bs, phi, cfg.formulation, cfg.flow == "frozen", cfg.cfl, cfg.solver_tol)
    if cfg.formulation == "transformed_c":
        model.lifts = chem.lift_g1_g2(bs, cfg.solver_tol)
    return model


def initial_state(cfg: SimConfig, model: Model) -> SimState:
    grid = model.grid
    X, Y = grid.centers
    n = ScalarField.from_interior(grid, parse_expression(cfg.n0)(X, Y), "n")
    c = fill_ghost_robin(ScalarField.from_interior(grid, parse_expression(cfg.c0)(X, Y), "c"), model.bs)
    if np.any(n.interior < 0) or np.any(c.interior < 0):
        raise CesimError("initial data n0 and c0 must be nonnegative")
    flow = euler.flow_from_streamfunction(parse_expression(cfg.psi0)(X, Y), grid)
    return SimState(0.0, 0, n, c, flow)


def stable_dt(state: SimState, model: Model) -> float:
    """Largest step allowed by the explicit upwind transport of n, c and omega."""
    rate = chem.n_outflow_rate(state.flow.u, state.c)
    if model.formulation == "transformed_n":
        rate = max(rate, euler.outflow_rate(state.flow.u, _negated(chem.chemotactic_velocity(state.c))))
    return math.inf if rate == 0 else model.cfl / rate


def _negated(w):
    w.x *= -1.0
    w.y *= -1.0
    return w


def advance(state: SimState, dt: float, model: Model, sources: dict | None = None, bs: BoundarySpec | None = None) -> SimState:
    """One split step: flow, then oxygen, then bacteria.

    ``sources`` may hold explicit forcing arrays under keys ``omega``, ``c``
    and ``n`` (used by manufactured-solution runs); ``bs`` overrides the
    model's boundary data for this step.
    """
    src = sources or {}
    bs = bs or model.bs
    u = state.flow.u
    n, c = state.n, state.c

    if model.frozen_flow:
        flow = state.flow
    else:
        flow = euler.step_vorticity(state.flow, n, model.phi, dt, model.cfl, src.get("omega"), model.tol)

    if model.formulation == "transformed_c":
        g1, g2 = model.lifts
        ct = chem.step_c_transformed(chem.transform_c(c, g1, g2), u, n, c, g1, g2, dt, model.cfl, model.tol)
        c_new = fill_ghost_robin(chem.untransform_c(ct, g1, g2), bs)
        c_new.name = "c"
    else:
        c_new = chem.step_c(c, u, n, bs, dt, src.get("c"), model.cfl, model.tol)

    if model.formulation == "transformed_n":
        nt = chem.step_n_transformed(chem.transform_n(n, c), u, c, n, bs, dt, model.cfl, model.tol)
        n_new = chem.untransform_n(nt, c_new)
    else:
        n_new = chem.step_n(n, u, c, dt, src.get("n"), model.cfl, model.tol)
    return SimState(state.t + dt, state.step + 1, n_new, c_new, flow)


def c_bound(cfg: SimConfig, model: Model, state: SimState) -> float:
    return float(max(np.max(model.bs.gamma), np.max(state.c.interior)))


def output_times(cfg: SimConfig) -> list[float]:
    """Evenly spaced frame times; the last one is T_end exactly."""
    return [cfg.T_end * k / cfg.frames for k in range(1, cfg.frames)] + [cfg.T_end]


def _frame_stem(out_dir: Path, frame: int) -> Path:
    return out_dir / "snapshots" / f"frame_{frame:04d}"


def write_frame(out_dir: Path, frame: int, state: SimState, sample: MonitorSample, encoding: str) -> list[Path]:
    stem = _frame_stem(out_dir, frame)
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, f in (("n", state.n), ("c", state.c), ("omega", state.flow.omega), ("psi", state.flow.psi)):
        p = stem.with_name(f"{stem.name}_{name}.cesim")
        g = f.copy(name)
        write_snapshot(p, g, state.t, encoding)
        paths.append(p)
    manifest = {"frame": frame, "t": state.t, "step": state.step, "sample": asdict(sample)}
    mp = stem.with_name(f"{stem.name}.json")
    mp.write_text(json.dumps(manifest, indent=1))
    paths.append(mp)
    return paths


def load_frame(stem: str | Path, model: Model) -> tuple[SimState, MonitorSample]:
    """Restore the state written by :func:`write_frame` (``stem`` without suffix)."""
    stem = Path(stem)
    if stem.suffix == ".json":
        stem = stem.with_suffix("")
    manifest = json.loads(stem.with_name(f"{stem.name}.json").read_text())
    fields_ = {}
    for name in ("n", "c", "omega"):
        f, t = read_snapshot(stem.with_name(f"{stem.name}_{name}.cesim"))
        if f.grid != model.grid:
            raise CesimError(f"snapshot grid {f.grid} does not match configuration {model.grid}")
        fields_[name] = f
    c = fill_ghost_robin(fields_["c"], model.bs)
    c.name = "c"
    omega = fields_["omega"]
    omega.name = "omega"
    flow = euler.flow_from_vorticity(omega, model.tol)
    state = SimState(float(manifest["t"]), int(manifest["step"]), fields_["n"], c, flow)
    state.n.name = "n"
    return state, MonitorSample(**manifest["sample"])


def _apply_thread_limit():
    raw = os.environ.get("CESIM_THREADS")
    if raw is None:
        return None
    try:
        k = int(raw)
        if k < 1:
            raise ValueError
    except ValueError:
        raise CesimError(f"CESIM_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=k)


def run(
    cfg: SimConfig,
    out_dir: str | Path | None = None,
    restart: str | Path | None = None,
    hook: Callable[[SimState], None] | None = None,
    t_stop: float | None = None,
) -> RunResult:
    """Integrate to ``cfg.T_end`` (or ``t_stop``), sampling monitors every step.

    Snapshots and ``monitors.csv`` go to ``out_dir`` when given.  ``restart``
    names a frame written by an earlier run with the same configuration.
    ``hook`` is called with the state after every step and may modify it.
    """
    limiter = _apply_thread_limit()
    try:
        return _run(cfg, out_dir, restart, hook, t_stop)
    finally:
        if limiter is not None:
            limiter.unregister()


def _run(cfg, out_dir, restart, hook, t_stop) -> RunResult:
    model = build_model(cfg)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t_end = cfg.T_end if t_stop is None else min(t_stop, cfg.T_end)
    series = MonitorSeries()
    snapshots: list[Path] = []

    if restart is not None:
        state, first = load_frame(restart, model)
        bound = first.c_bound
    else:
        state = initial_state(cfg, model)
        bound = c_bound(cfg, model, state)
        first = monitors.sample_state(0.0, 0, 0.0, state.n, state.c, state.flow, model.bs, bound)
    series.append(first)
    gphi = model.grad_phi_max

    times = [t for t in output_times(cfg) if t > state.t * (1 + 1e-14) and t <= t_end * (1 + 1e-14)]
    if t_stop is not None and t_end not in times:
        times = sorted(set(times) | {t_end})
    frame_of = {t: k for k, t in enumerate(output_times(cfg), start=1)}
    if out is not None and restart is None:
        snapshots += write_frame(out, 0, state, first, cfg.encoding)

    status, error, prev = COMPLETED, None, first
    try:
        for target in times:
            while state.t < target:
                dt = min(cfg.dt_max, stable_dt(state, model))
                gap = target - state.t
                land = gap <= dt * (1 + 1e-12)
                if land:
                    dt = gap
                elif gap < 2 * dt:
                    dt = 0.5 * gap
                new = advance(state, dt, model)
                if land:
                    new.t = target
                if hook is not None:
                    hook(new)
                s = monitors.sample_state(
                    new.t, new.step, dt, new.n, new.c, new.flow, model.bs, bound,
                    prev=prev, gphi=gphi, n_prev=state.n, c_prev=state.c, flow_prev=state.flow,
                )
                series.append(s)
                state, prev = new, s
                if s.blowup:
                    status = BLOWUP
                    log.warning("blow-up detected at t=%g (step %d)", s.t, s.step)
                    raise _Stop
            if out is not None and target in frame_of:
                snapshots += write_frame(out, frame_of[target], state, prev, cfg.encoding)
    except _Stop:
        pass
    except (SolverError, CFLError) as exc:
        exc.step = state.step + 1
        status, error = SOLVER_FAILURE, exc
        log.error("step %d failed: %s", state.step + 1, exc)
    except (FloatingPointError, ValueError) as exc:
        if any(s.blowup for s in series.samples) or not np.all(np.isfinite(state.n.interior)):
            status = BLOWUP
        else:
            status, error = SOLVER_FAILURE, exc

    tol = monitors.CheckTolerances(gronwall=cfg.gronwall_tol)
    report = monitors.check_run(series, tol)
    result = RunResult(series, status, report, state, out, error, snapshots)
    if out is not None:
        series.write_csv(out / "monitors.csv")
        (out / "report.txt").write_text(f"status: {status}\n{report}\n")
        (out / "config.ini").write_text(cfg.to_text())
        if cfg.figures:
            from cesim.plotting import plot_fields, plot_monitors

            plot_monitors(series, out / "monitors.png")
            if np.all(np.isfinite(state.n.interior)):
                plot_fields(state, out / "fields.png")
    return result


class _Stop(Exception):
    pass
