import numpy as np
import pytest

from cesim import euler
from cesim.errors import CFLError
from cesim.grid import FaceField, Grid, ScalarField, integral, lq_norm, one_sided_gradient

EPS = np.finfo(float).eps


def _sinsin(g):
    X, Y = g.centers
    return np.sin(np.pi * X) * np.sin(np.pi * Y)


def test_zero_vorticity_gives_zero_streamfunction():
    g = Grid(16, 16)
    psi = euler.solve_streamfunction(ScalarField.zeros(g, "omega"))
    assert np.all(psi.values == 0.0)


@pytest.mark.parametrize("N", [32, 64])
def test_streamfunction_eigenfunction(N):
    g = Grid(N, N)
    exact = _sinsin(g)
    psi = euler.solve_streamfunction(ScalarField.from_interior(g, 2 * np.pi**2 * exact))
    assert lq_norm(psi.interior - exact, 2, g) <= 0.5 / N**2


def test_streamfunction_error_ratio():
    errs = []
    for N in (32, 64):
        g = Grid(N, N)
        exact = _sinsin(g)
        psi = euler.solve_streamfunction(ScalarField.from_interior(g, 2 * np.pi**2 * exact))
        errs.append(lq_norm(psi.interior - exact, 2, g))
    assert 3.6 <= errs[0] / errs[1] <= 4.4


def test_streamfunction_maximum_principle():
    g = Grid(20, 13, 1.0, 0.65)
    psi = euler.solve_streamfunction(ScalarField.from_interior(g, np.ones(g.shape)))
    assert psi.interior.min() >= 0.0


def test_zero_streamfunction_gives_zero_velocity():
    g = Grid(8, 8)
    flow = euler.flow_from_streamfunction(np.zeros(g.shape), g)
    assert flow.u.max_abs() == 0.0


def test_velocity_divergence_free(rng):
    g = Grid(24, 17, 1.3, 0.9)
    flow = euler.flow_from_streamfunction(rng.normal(size=g.shape), g)
    assert np.abs(euler.velocity_divergence(flow.u)).max() <= 10 * EPS / g.h_min * max(1.0, flow.u.max_abs())


def test_velocity_impermeable():
    g = Grid(16, 16)
    flow = euler.flow_from_streamfunction(_sinsin(g), g)
    assert np.all(flow.u.boundary_normal() == 0.0)


def test_source_constant_density_vanishes():
    g = Grid(12, 12)
    X, Y = g.centers
    n = ScalarField.from_interior(g, np.full(g.shape, 2.5))
    for phi in (Y, X, X**2 + X * Y):
        S = euler.vorticity_source(n, ScalarField.from_interior(g, phi.copy()))
        assert np.abs(S.interior).max() <= 1e-10


def test_source_hand_values():
    g = Grid(12, 12)
    X, Y = g.centers
    S = euler.vorticity_source(ScalarField.from_interior(g, Y.copy()), ScalarField.from_interior(g, X.copy()))
    np.testing.assert_allclose(S.interior, 1.0, atol=1e-12)
    S = euler.vorticity_source(ScalarField.from_interior(g, X.copy()), ScalarField.from_interior(g, X.copy()))
    np.testing.assert_allclose(S.interior, 0.0, atol=1e-12)


def _flow(g, amp=0.5):
    return euler.flow_from_streamfunction(amp * _sinsin(g) * (1 + 0.3 * g.centers[0]), g)


def test_circulation_conserved_without_bacteria():
    g = Grid(20, 20)
    flow = _flow(g)
    flow = euler.flow_from_vorticity(ScalarField.from_interior(g, flow.omega.interior + 0.7 * g.centers[1]))
    n = ScalarField.zeros(g)
    phi = ScalarField.from_interior(g, g.centers[1].copy())
    before = integral(flow.omega.interior, g)
    for _ in range(10):
        flow = euler.step_vorticity(flow, n, phi, 0.01)
    assert integral(flow.omega.interior, g) == pytest.approx(before, rel=1e-13, abs=1e-13)


def test_zero_state_stays_zero():
    g = Grid(10, 10)
    flow = euler.flow_from_vorticity(ScalarField.zeros(g, "omega"))
    phi = ScalarField.from_interior(g, g.centers[1].copy())
    for _ in range(5):
        flow = euler.step_vorticity(flow, ScalarField.zeros(g), phi, 0.05)
    assert np.all(flow.omega.interior == 0.0) and flow.u.max_abs() == 0.0


def test_vorticity_l2_non_increasing_without_forcing():
    g = Grid(16, 16)
    flow = _flow(g, 1.0)
    phi = ScalarField.from_interior(g, g.centers[1].copy())
    norms = [lq_norm(flow.omega)]
    for _ in range(20):
        flow = euler.step_vorticity(flow, ScalarField.zeros(g), phi, 0.01)
        norms.append(lq_norm(flow.omega))
    assert np.all(np.diff(norms) <= 1e-14 * norms[0])


def test_cfl_violation_reports_admissible_step():
    g = Grid(16, 16)
    flow = _flow(g, 1.0)
    rate = euler.outflow_rate(flow.u)
    with pytest.raises(CFLError) as info:
        euler.step_vorticity(flow, ScalarField.zeros(g), ScalarField.zeros(g), 2.0 / rate)
    assert info.value.dt_admissible == pytest.approx(0.9 / rate)


def test_passive_advection_conserves_and_bounds(rng):
    g = Grid(16, 16)
    flow = _flow(g, 1.0)
    q = ScalarField.from_interior(g, rng.random(g.shape))
    lo, hi, total = q.interior.min(), q.interior.max(), integral(q.interior, g)
    dt = 0.9 / euler.outflow_rate(flow.u)
    for _ in range(10):
        q = euler.advance_passive(q, flow.u, dt)
    assert integral(q.interior, g) == pytest.approx(total, rel=1e-13)
    assert lo - 1e-14 <= q.interior.min() and q.interior.max() <= hi + 1e-14


def test_pressure_zero_state():
    g = Grid(8, 8)
    flow = euler.flow_from_vorticity(ScalarField.zeros(g, "omega"))
    p = euler.recover_pressure(flow, ScalarField.zeros(g), ScalarField.from_interior(g, g.centers[0].copy()))
    assert np.abs(p.interior).max() <= 1e-14


@pytest.mark.parametrize("N", [16, 32])
def test_pressure_hydrostatic(N):
    g = Grid(N, N)
    flow = euler.flow_from_vorticity(ScalarField.zeros(g, "omega"))
    p = euler.recover_pressure(flow, ScalarField.from_interior(g, np.ones(g.shape)), ScalarField.from_interior(g, g.centers[0].copy()))
    gx, gy = one_sided_gradient(p.interior, g)
    assert np.abs(gx + 1).max() <= g.hx**2 and np.abs(gy).max() <= g.hx**2
    np.testing.assert_allclose(p.interior, 0.5 - g.centers[0], atol=1e-12)


def test_pressure_mean_zero_for_moving_flow(rng):
    g = Grid(16, 16)
    flow = _flow(g, 1.0)
    n = ScalarField.from_interior(g, 1 + rng.random(g.shape))
    phi = ScalarField.from_interior(g, g.centers[1].copy())
    p = euler.with_pressure(flow, n, phi).p
    assert abs(p.interior.mean()) <= 1e-15 * max(1.0, np.abs(p.interior).max())


def test_pressure_balances_rotation():
    # a single cellular vortex: centripetal balance puts the pressure minimum at the core
    g = Grid(32, 32)
    flow = _flow(g, 1.0)
    p = euler.recover_pressure(flow, ScalarField.zeros(g), ScalarField.zeros(g))
    X, Y = g.centers
    r2 = (X - 0.5) ** 2 + (Y - 0.5) ** 2
    assert p.interior[r2 < 0.01].mean() < p.interior[r2 > 0.2].mean()


def test_flowstate_copy_independent():
    g = Grid(8, 8)
    f = _flow(g)
    c = f.copy()
    c.u.x[:] = 7.0
    assert not np.any(f.u.x == 7.0)


def test_face_field_shape_check():
    with pytest.raises(ValueError):
        FaceField(Grid(4, 4), np.zeros((4, 4)), np.zeros((4, 5)))
