import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from cesim import monitors
from cesim.grid import Grid, ScalarField
from cesim.monitors import CheckTolerances, MonitorSample, MonitorSeries, check_run

C_SMALL = 1.0 / 48.0


def _sym_gap():
    c = sp.symbols("c")
    th = sp.exp(12 * c**2)
    gap = sp.diff(th, c, 2) / 4 - 5 * sp.diff(th, c) ** 2 / th - th - sp.diff(th, c)
    return c, th, gap


def test_theta_values():
    assert monitors.theta(0.0) == 1.0
    assert monitors.theta(C_SMALL) == pytest.approx(math.exp(1 / 192), rel=1e-15)
    assert monitors.theta(C_SMALL) == pytest.approx(1.005221, abs=1e-6)


def test_theta_gap_matches_symbolic_oracle():
    c, th, gap = _sym_gap()
    ratio = sp.simplify(gap / th)
    assert sp.expand(ratio - (5 - 2736 * c**2 - 24 * c)) == 0
    f = sp.lambdify(c, gap, "math")
    for v in (0.0, 0.005, 0.01, C_SMALL, 0.03):
        assert monitors.theta_inequality_gap(v) == pytest.approx(f(v), rel=1e-13)
    # gap / theta at c = 1/48 is 5 - 2736/2304 - 1/2 = 53/16
    assert monitors.theta_inequality_gap(C_SMALL) / monitors.theta(C_SMALL) == pytest.approx(53 / 16, rel=1e-14)
    assert monitors.theta_inequality_gap(0.0) == pytest.approx(5.0, rel=1e-15)


def test_theta_gap_sign_change():
    root = (-24 + math.sqrt(24**2 + 4 * 2736 * 5)) / (2 * 2736)
    assert root == pytest.approx(0.0386, abs=1e-4)
    assert monitors.theta_inequality_gap(root - 1e-6) > 0 > monitors.theta_inequality_gap(root + 1e-6)


@given(st.floats(0.0, C_SMALL))
def test_theta_gap_positive_on_admissible_range(c):
    assert monitors.theta_inequality_gap(c) > 0
    assert monitors.theta_gap_ratio(c) == pytest.approx(monitors.theta_inequality_gap(c) / monitors.theta(c), rel=1e-12)


def test_weighted_energy_examples():
    g = Grid(16, 16)
    one = ScalarField.from_interior(g, np.ones(g.shape))
    assert monitors.weighted_energy(one, ScalarField.zeros(g)) == pytest.approx(1.0, rel=1e-14)
    assert monitors.weighted_energy(ScalarField.zeros(g), one) == 0.0
    c = ScalarField.from_interior(g, np.full(g.shape, C_SMALL))
    assert monitors.weighted_energy(one, c) == pytest.approx(math.exp(1 / 192), rel=1e-14)


def test_gronwall_residual_hand_values():
    prev = MonitorSample(t=0.0, omega_l2=0.0, grad_n_l2=2.0)
    cur = MonitorSample(t=0.1, omega_l2=0.0)
    assert monitors.gronwall_residual(prev, cur, 1.5) == pytest.approx(-3.0)
    flat = MonitorSample(t=0.0, omega_l2=0.0, grad_n_l2=0.0)
    assert monitors.gronwall_residual(flat, cur, 1.0) == 0.0
    grow = MonitorSample(t=0.1, omega_l2=0.5)
    assert monitors.gronwall_residual(prev, grow, 1.0) == pytest.approx(5.0 - 2.0)


def test_grad_phi_max():
    g = Grid(8, 8)
    X, Y = g.centers
    assert monitors.grad_phi_max(ScalarField.from_interior(g, 3 * X + 4 * Y)) == pytest.approx(5.0)


def _series(rows):
    s = MonitorSeries()
    for r in rows:
        s.append(r)
    return s


def _passing_series(k=5):
    return _series(
        MonitorSample(t=0.1 * i, step=i, c_max=0.02, c_min=0.001, n_min=0.5, n_mass=1.0,
                      weighted_energy=1.0 - 0.01 * i, c_bound=C_SMALL, kappa_max=0.0, gronwall_residual=-0.1)
        for i in range(k)
    )


def test_check_run_passes_clean_series():
    rep = check_run(_passing_series())
    assert rep.passed, str(rep)
    assert "overall: PASS" in str(rep)


def test_check_run_zero_data():
    rows = [MonitorSample(t=0.1 * i, step=i) for i in range(3)]
    assert check_run(_series(rows)).passed


@pytest.mark.parametrize(
    "field,value,check",
    [
        ("c_max", C_SMALL * (1 + 1e-6), "max_principle"),
        ("n_mass", 1.0 + 1e-6, "mass_conservation"),
        ("n_min", -1e-12, "positivity"),
        ("weighted_energy", 2.0, "energy_monotone"),
        ("gronwall_residual", 0.5, "gronwall"),
        ("omega_l2", math.nan, "finite"),
    ],
)
def test_check_run_detects_each_violation(field, value, check):
    s = _passing_series()
    setattr(s.samples[3], field, value)
    rep = check_run(s)
    failed = {c.name for c in rep.checks if not c.passed}
    assert check in failed and not rep.passed


def test_energy_check_skipped_with_robin_exchange():
    s = _passing_series()
    for x in s.samples:
        x.kappa_max = 1.0
    s.samples[3].weighted_energy = 5.0
    assert check_run(s).passed


def test_gronwall_tolerance_is_configurable():
    s = _passing_series()
    s.samples[2].gronwall_residual = 0.01
    assert not check_run(s).passed
    assert check_run(s, CheckTolerances(gronwall=0.1)).passed


def test_blowup_detection():
    assert monitors.detect_blowup(MonitorSample(t=0, n_max=1e308))
    assert monitors.detect_blowup(MonitorSample(t=0, u_l2=math.inf))
    assert not monitors.detect_blowup(MonitorSample(t=0, n_max=1e6))


def test_series_times_must_increase():
    s = _passing_series(2)
    with pytest.raises(ValueError):
        s.append(MonitorSample(t=0.1))


def test_csv_round_trip(tmp_path):
    s = _passing_series()
    s.samples[1].blowup = True
    s.samples[2].omega_l2 = 1 / 3
    path = tmp_path / "m.csv"
    s.write_csv(path)
    back = MonitorSeries.read_csv(path)
    assert back.samples == s.samples
    header = path.read_text().splitlines()[0].split(",")
    assert header == monitors.COLUMNS


def test_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,step\n0,0\n")
    with pytest.raises(ValueError):
        MonitorSeries.read_csv(path)


def test_energy_increments():
    inc = monitors.weighted_energy_increments(np.array([1.0, 0.9, 0.99, 0.5]))
    np.testing.assert_allclose(inc, [0.0, 0.1, 0.0])
