import numpy as np
import pytest

from cesim import simulate
from cesim.config import SimConfig, scenario_config
from cesim.errors import CesimError
from cesim.expressions import parse_expression
from cesim.grid import Grid
from cesim.monitors import MonitorSeries

C_SMALL = 1.0 / 48.0


def _dense_reference(cfg: SimConfig, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Explicit Euler for the flow-free system, written out with dense face-flux matrices."""
    N = cfg.nx
    h = 1.0 / N
    xs = (np.arange(N) + 0.5) * h
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    n = parse_expression(cfg.n0)(X, Y).ravel()
    c = parse_expression(cfg.c0)(X, Y).ravel()
    kappa = float(cfg.kappa)
    gamma = float(parse_expression(cfg.gamma)(0.0, 0.0))
    size = N * N
    idx = np.arange(size).reshape(N, N)
    # interior face list (left cell, right cell)
    faces = [(idx[i, j], idx[i + 1, j]) for i in range(N - 1) for j in range(N)]
    faces += [(idx[i, j], idx[i, j + 1]) for i in range(N) for j in range(N - 1)]
    D = np.zeros((len(faces), size))
    for k, (a, b) in enumerate(faces):
        D[k, a], D[k, b] = -1.0 / h, 1.0 / h
    # -D^T maps face fluxes to cell divergences, so -D^T D is the Neumann Laplacian
    L = -(D.T @ D)
    # Robin exchange through every boundary face: flux kappa (gamma - c_face) with c_face
    # eliminated from (c_face - c_i)/(h/2) = kappa (gamma - c_face)
    nb = np.zeros(size)
    for i in range(N):
        for cell in (idx[0, i], idx[N - 1, i], idx[i, 0], idx[i, N - 1]):
            nb[cell] += 1
    rob = kappa * (2 / h) / (2 / h + kappa) / h
    avg = np.abs(D) * h / 2  # face averages
    steps = int(round(cfg.T_end / dt))
    for _ in range(steps):
        grad_c = D @ c
        n_face = avg @ n
        flux_n = D @ n - n_face * grad_c
        dn = -D.T @ flux_n
        dc = L @ c + nb * rob * (gamma - c) - n * c
        n = n + dt * dn
        c = c + dt * dc
    return n.reshape(N, N), c.reshape(N, N)


def test_fluid_free_matches_dense_reference():
    cfg = scenario_config("fluid-free", figures=False, frames=1)
    res = simulate.run(cfg)
    assert res.status == "completed"
    n_ref, c_ref = _dense_reference(cfg, 1e-5)
    for num, ref in ((res.state.n.interior, n_ref), (res.state.c.interior, c_ref)):
        rel = np.linalg.norm(num - ref) / np.linalg.norm(ref)
        assert rel <= 1e-3


def test_no_bacteria_keeps_fluid_at_rest():
    res = simulate.run(scenario_config("no-bacteria", figures=False))
    assert res.status == "completed" and res.report.passed
    assert res.state.flow.u.max_abs() == 0.0
    assert np.all(res.series.column("u_l2") == 0.0)
    c = res.series.column("c_max")
    c_min = res.series.column("c_min")
    # oxygen relaxes toward gamma = 1/48 from below
    assert c_min[-1] > c_min[0]
    assert c[-1] <= C_SMALL


def test_zero_scenario_passes_trivially():
    res = simulate.run(scenario_config("zero", figures=False))
    assert res.status == "completed" and res.report.passed
    assert res.series.column("n_mass").max() == 0.0


def test_step_sequence_hits_frames():
    cfg = scenario_config("zero", figures=False, frames=3, dt_max=0.03, T_end=0.1)
    res = simulate.run(cfg)
    t = res.series.column("t")
    for frame_t in simulate.output_times(cfg):
        assert np.any(t == frame_t)
    assert t[-1] == cfg.T_end
    assert res.series.column("dt")[1:].max() <= 0.03


def test_outputs_written(tmp_path):
    cfg = scenario_config("zero", frames=2)
    simulate.run(cfg, tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"monitors.csv", "report.txt", "config.ini", "monitors.png", "fields.png", "snapshots"} <= names
    snaps = sorted(p.name for p in (tmp_path / "snapshots").iterdir())
    assert "frame_0000_n.cesim" in snaps and "frame_0002.json" in snaps
    assert len(MonitorSeries.read_csv(tmp_path / "monitors.csv")) > 2


def test_blowup_injection_is_flagged():
    def inject(state):
        if state.step == 3:
            state.n.values[5, 5] = 1e308

    res = simulate.run(scenario_config("fluid-free", figures=False, T_end=1e-3), hook=inject)
    assert res.status == "blowup"
    assert res.series.samples[-1].blowup
    assert not res.report.passed
    assert "no_blowup" in {c.name for c in res.report.checks if not c.passed}


def test_solver_failure_is_reported():
    cfg = scenario_config("fluid-free", figures=False, solver_tol=1e-30, T_end=1e-3)
    res = simulate.run(cfg)
    assert res.status == "solver_failure"
    assert res.error.step == 1 and res.error.residual > 1e-30


def test_determinism(tmp_path):
    cfg = scenario_config("paper-smallness", nx=16, ny=16, T_end=0.05, frames=1, figures=False)
    simulate.run(cfg, tmp_path / "a")
    simulate.run(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "monitors.csv").read_bytes() == (tmp_path / "b" / "monitors.csv").read_bytes()


def test_restart_reproduces_direct_run(tmp_path):
    cfg = scenario_config("paper-smallness", nx=16, ny=16, T_end=0.1, frames=2, figures=False)
    direct = simulate.run(cfg, tmp_path / "a")
    resumed = simulate.run(cfg, tmp_path / "b", restart=tmp_path / "a" / "snapshots" / "frame_0001.json")
    tail = [s for s in direct.series.samples if s.t >= 0.05]
    assert resumed.series.samples == tail
    np.testing.assert_array_equal(resumed.state.n.values, direct.state.n.values)


def test_restart_grid_mismatch(tmp_path):
    cfg = scenario_config("zero", frames=1, figures=False)
    simulate.run(cfg, tmp_path)
    with pytest.raises(CesimError):
        simulate.run(cfg.replace(nx=20), restart=tmp_path / "snapshots" / "frame_0001")


def test_t_stop_ends_early():
    cfg = scenario_config("zero", figures=False)
    res = simulate.run(cfg, t_stop=0.033)
    assert res.state.t == 0.033


def test_negative_initial_data_rejected():
    with pytest.raises(CesimError):
        simulate.run(SimConfig(nx=8, ny=8, n0="x - 0.5", figures=False))


def test_thread_limit_variable(monkeypatch):
    monkeypatch.setenv("CESIM_THREADS", "1")
    assert simulate.run(scenario_config("zero", figures=False, T_end=0.02)).status == "completed"
    monkeypatch.setenv("CESIM_THREADS", "zero")
    with pytest.raises(CesimError):
        simulate.run(scenario_config("zero", figures=False, T_end=0.02))


@pytest.mark.parametrize("formulation", ["transformed_n", "transformed_c"])
def test_transformed_formulations_run(formulation):
    cfg = scenario_config("paper-smallness", nx=16, ny=16, T_end=0.05, figures=False, formulation=formulation)
    res = simulate.run(cfg)
    assert res.status == "completed"
    assert res.series.column("c_max").max() <= C_SMALL * (1 + 1e-8)


def test_stable_dt_respects_transport():
    cfg = scenario_config("paper-smallness", nx=16, ny=16, psi0="sin(pi*x)*sin(pi*y)")
    model = simulate.build_model(cfg)
    state = simulate.initial_state(cfg, model)
    dt = simulate.stable_dt(state, model)
    nxt = simulate.advance(state, dt, model)
    assert nxt.step == 1 and nxt.t == dt
    assert Grid(16, 16) == nxt.n.grid
