"""Acceptance suite: twelve end-to-end checks of the solver and its monitors.

Every criterion is a function returning a :class:`Criterion`.  The expensive
base runs are cached so the suite (``cesim verify`` or the pytest module)
runs each of them once.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from cesim import euler, monitors
from cesim.config import SCENARIOS, SimConfig, scenario_config
from cesim.grid import Grid, ScalarField, lq_norm, one_sided_gradient
from cesim.mms import mms_convergence
from cesim.simulate import RunResult, run

C_SMALL = 1.0 / 48.0


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2}. {self.name}: {self.detail}"


# --------------------------------------------------------------------------
# cached runs


@lru_cache(maxsize=None)
def scenario_run(name: str, **overrides) -> RunResult:
    return run(scenario_config(name, figures=False, **overrides))


def smallness_run(dt_max: float | None = None) -> RunResult:
    if dt_max is None:
        return scenario_run("paper-smallness")
    return scenario_run("paper-smallness", dt_max=dt_max)


# --------------------------------------------------------------------------
# criteria


def theta_inequality(samples: int = 10_000, seed: int = 0) -> Criterion:
    c = np.random.default_rng(seed).uniform(0.0, C_SMALL, samples)
    gap = monitors.theta_inequality_gap(c)
    at_edge = monitors.theta_inequality_gap(C_SMALL)
    expected = 0.828125 * monitors.theta(C_SMALL)
    err = abs(at_edge - expected)
    ok = bool(np.all(gap > 0)) and err <= 1e-12
    return Criterion(1, "theta inequality", ok, f"min gap {gap.min():.6f} over {samples} samples; |gap(1/48) - 0.828125 theta| = {err:.1e}")


def maximum_principle() -> Criterion:
    r = smallness_run()
    cmax = float(r.series.column("c_max").max())
    ok = r.status == "completed" and cmax <= C_SMALL * (1 + 1e-8)
    return Criterion(2, "maximum principle", ok, f"max c = {cmax:.17g} (1/48 = {C_SMALL:.17g}), status {r.status}")


def mass_conservation() -> Criterion:
    r = smallness_run()
    m = r.series.column("n_mass")
    drift = float(np.max(np.abs(m - m[0])) / abs(m[0]))
    steps = int(r.series.column("step")[-1])
    ok = steps >= 500 and drift <= 1e-8
    return Criterion(3, "mass conservation", ok, f"relative drift {drift:.2e} over {steps} steps")


def positivity() -> Criterion:
    worst, where = math.inf, ""
    for name in SCENARIOS:
        r = scenario_run(name)
        m = min(float(r.series.column("n_min").min()), float(r.series.column("c_min").min()))
        if m < worst:
            worst, where = m, name
    ok = worst >= -1e-14
    return Criterion(4, "positivity", ok, f"min(n, c) over all scenarios = {worst:.3e} ({where})")


def _worst_increment(r: RunResult) -> float:
    inc = monitors.weighted_energy_increments(r.series.column("weighted_energy"))
    return float(inc.max()) if inc.size else 0.0


def energy_monotonicity() -> Criterion:
    base = SCENARIOS["kappa-zero"]["dt_max"]
    coarse = scenario_run("kappa-zero")
    fine = scenario_run("kappa-zero", dt_max=base / 2)
    w0, w1 = _worst_increment(coarse), _worst_increment(fine)
    c0 = float(coarse.series.column("c_max")[0])
    slack = max(w0, w1) <= 1e-4 and c0 <= C_SMALL
    if w0 == 0.0 and w1 == 0.0:
        halves, note = True, "no positive increment at either dt"
    else:
        ratio = w0 / w1 if w1 > 0 else math.inf
        halves, note = 1.5 <= ratio <= 2.5, f"increment ratio {ratio:.3f}"
    ok = slack and halves and coarse.status == fine.status == "completed"
    return Criterion(5, "weighted-energy monotonicity", ok, f"worst relative increase {w0:.2e} (dt), {w1:.2e} (dt/2); {note}")


def _gronwall_constant_n() -> RunResult:
    cfg = SimConfig(
        nx=64, ny=64, T_end=0.2, dt_max=2e-3, n0="1", c0="1/96", kappa="0", gamma="0",
        psi0="0.1*sin(pi*x)*sin(pi*y)", figures=False,
    )
    return run(cfg)


def gronwall_residual() -> Criterion:
    def worst(r):
        return float(np.max(np.maximum(r.series.column("gronwall_residual")[1:], 0.0)))

    base = SCENARIOS["paper-smallness"]["dt_max"]
    w0, w1 = worst(smallness_run()), worst(smallness_run(base / 2))
    const = _gronwall_constant_n()
    wc = float(const.series.column("gronwall_residual")[1:].max())
    decreasing = w1 <= w0
    ok = w0 <= 1e-3 and decreasing and wc <= 0.0
    return Criterion(
        6, "vorticity Gronwall residual", ok,
        f"positive part {w0:.2e} (dt), {w1:.2e} (dt/2); max residual with constant n {wc:.2e}",
    )


def poisson_accuracy() -> Criterion:
    errs, divs = [], []
    for N in (32, 64):
        g = Grid(N, N)
        X, Y = g.centers
        exact = np.sin(np.pi * X) * np.sin(np.pi * Y)
        omega = ScalarField.from_interior(g, 2 * np.pi**2 * exact, "omega")
        flow = euler.flow_from_vorticity(omega)
        errs.append(lq_norm(flow.psi.interior - exact, 2, g))
        divs.append(float(np.abs(euler.velocity_divergence(flow.u)).max()) * g.h_min)
    ratio = errs[0] / errs[1]
    ok = 3.6 <= ratio <= 4.4 and max(divs) <= 1e-12
    return Criterion(7, "streamfunction accuracy", ok, f"error ratio 32->64 {ratio:.4f}; max |div u| * h {max(divs):.1e}")


def mms_orders() -> Criterion:
    dr = mms_convergence("diffusion_robin").last_order
    ad = mms_convergence("advection").last_order
    co = mms_convergence("coupled").last_order
    ok = dr >= 1.9 and 0.8 <= ad <= 1.2 and co >= 0.9
    return Criterion(8, "MMS orders", ok, f"diffusion_robin {dr:.3f}, advection {ad:.3f}, coupled {co:.3f}")


EQUIV_DATA = dict(
    n0="1 + 0.5*cos(pi*x)*cos(2*pi*y)",
    c0="(1 + cos(pi*x)*cos(pi*y))/96",
    psi0="0.05*sin(pi*x)*sin(pi*y)",
    kappa="1 + 0.5*x",
    gamma="1/48",
    T_end=0.05,
    frames=1,
    figures=False,
)


def formulation_gaps(N: int, dt: float) -> tuple[float, float]:
    """Relative L2 gaps (n: direct vs n-tilde, c: direct vs c-tilde) at T_end."""
    states = {
        f: run(SimConfig(nx=N, ny=N, dt_max=dt, formulation=f, **EQUIV_DATA)).state
        for f in ("direct", "transformed_n", "transformed_c")
    }
    d = states["direct"]
    gn = lq_norm(states["transformed_n"].n.interior - d.n.interior, 2, d.n.grid) / lq_norm(d.n)
    gc = lq_norm(states["transformed_c"].c.interior - d.c.interior, 2, d.c.grid) / lq_norm(d.c)
    return gn, gc


def formulation_equivalence() -> Criterion:
    # parabolic refinement dt = 3.2 h^2, so the first-order time error shrinks with the spatial one
    gaps = {N: formulation_gaps(N, 3.2 / N**2) for N in (32, 64)}
    on = math.log2(gaps[32][0] / gaps[64][0])
    oc = math.log2(gaps[32][1] / gaps[64][1])
    # the same comparison with dt proportional to h, reported for reference
    lin = {N: formulation_gaps(N, 0.2 / N) for N in (32, 64)}
    ln = math.log2(lin[32][0] / lin[64][0])
    lc = math.log2(lin[32][1] / lin[64][1])
    small = max(gaps[64] + lin[64]) <= 5e-2
    ok = small and on >= 1.0 and oc >= 1.0
    return Criterion(
        9, "formulation equivalence", ok,
        f"64^2 gaps n {gaps[64][0]:.2e}, c {gaps[64][1]:.2e}; orders n {on:.3f}, c {oc:.3f} "
        f"(dt ~ h^2); dt ~ h: gaps n {lin[64][0]:.2e}, c {lin[64][1]:.2e}, orders n {ln:.3f}, c {lc:.3f}",
    )


def zero_cases() -> Criterion:
    nb = scenario_run("no-bacteria")
    umax = max(float(nb.series.column("u_l2").max()), nb.state.flow.u.max_abs())
    cfg = SimConfig(nx=32, ny=32, T_end=0.5, n0="0", c0="1/48", kappa="1", gamma="1/48", figures=False)
    cc = run(cfg)
    cdev = float(np.abs(cc.state.c.interior - C_SMALL).max()) / C_SMALL
    ok = umax <= 1e-15 and cdev <= 1e-10
    return Criterion(10, "zero cases", ok, f"max |u| with n = 0: {umax:.1e}; constant c relative deviation {cdev:.1e}")


def pressure_recovery() -> Criterion:
    worst_rel, mean_abs = 0.0, 0.0
    for N in (32, 64):
        g = Grid(N, N)
        X, _ = g.centers
        flow = euler.flow_from_vorticity(ScalarField.zeros(g, "omega"))
        n = ScalarField.from_interior(g, np.ones(g.shape), "n")
        phi = ScalarField.from_interior(g, X.copy(), "phi")
        p = euler.recover_pressure(flow, n, phi)
        gx, gy = one_sided_gradient(p.interior, g)
        err = max(float(np.abs(gx + 1.0).max()), float(np.abs(gy).max()))
        worst_rel = max(worst_rel, err / g.h_min**2)
        mean_abs = max(mean_abs, abs(float(p.interior.mean())))
    ok = worst_rel <= 1.0 and mean_abs <= 1e-14
    return Criterion(11, "pressure recovery", ok, f"max |grad p + (1, 0)| / h^2 = {worst_rel:.1e}; |mean p| = {mean_abs:.1e}")


RESTART_CFG = dict(nx=32, ny=32, T_end=0.2, frames=2, figures=False)


def determinism_restart() -> Criterion:
    cfg = scenario_config("paper-smallness", **RESTART_CFG)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        a = run(cfg, tmp / "a")
        run(cfg, tmp / "b")
        identical = (tmp / "a" / "monitors.csv").read_bytes() == (tmp / "b" / "monitors.csv").read_bytes()
        resumed = run(cfg, tmp / "c", restart=tmp / "a" / "snapshots" / "frame_0001")
    t_half = cfg.T_end / 2
    direct = [s for s in a.series.samples if s.t >= t_half]
    again = resumed.series.samples
    worst = 0.0
    same_len = len(direct) == len(again)
    if same_len:
        for s, r in zip(direct, again):
            for col in monitors.COLUMNS:
                u, v = float(getattr(s, col)), float(getattr(r, col))
                if u != v:
                    worst = max(worst, abs(u - v) / max(abs(u), abs(v)))
    ok = identical and same_len and worst <= 1e-12
    return Criterion(
        12, "determinism and restart", ok,
        f"monitors.csv identical: {identical}; resumed samples {len(again)}/{len(direct)}, worst relative difference {worst:.1e}",
    )


CRITERIA = (
    theta_inequality,
    maximum_principle,
    mass_conservation,
    positivity,
    energy_monotonicity,
    gronwall_residual,
    poisson_accuracy,
    mms_orders,
    formulation_equivalence,
    zero_cases,
    pressure_recovery,
    determinism_restart,
)


def run_all(echo=print) -> list[Criterion]:
    results = []
    for fn in CRITERIA:
        c = fn()
        results.append(c)
        if echo is not None:
            echo(c.line())
    return results
