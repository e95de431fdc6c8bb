import csv

import pytest

from cesim.cli import main


@pytest.fixture(scope="module")
def passing_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("nb")
    code = main(["run", "--scenario", "no-bacteria", "--out", str(out), "--no-figures"])
    return code, out


def test_run_scenario_succeeds(passing_run, capsys):
    code, out = passing_run
    assert code == 0
    assert (out / "monitors.csv").exists() and (out / "report.txt").read_text().startswith("status: completed")


def test_report_passing_then_tampered(passing_run, tmp_path, capsys):
    _, out = passing_run
    assert main(["report", "--series", str(out / "monitors.csv")]) == 0
    with open(out / "monitors.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    col = rows[0].index("c_max")
    rows[5][col] = repr(1 / 48 * (1 + 2e-6))
    bad = tmp_path / "tampered.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    assert main(["report", "--series", str(bad)]) == 1
    assert "FAIL  max_principle" in capsys.readouterr().out


def test_report_figure(passing_run, tmp_path):
    _, out = passing_run
    fig = tmp_path / "m.png"
    assert main(["report", "--series", str(out / "monitors.csv"), "--figure", str(fig)]) == 0
    assert fig.read_bytes()[:4] == b"\x89PNG"


def test_report_missing_file(tmp_path):
    assert main(["report", "--series", str(tmp_path / "none.csv")]) == 2


def test_mms_table(capsys):
    assert main(["mms", "--suite", "diffusion_robin"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = [ln for ln in lines if ln.split()[0].isdigit()]
    assert [int(r.split()[0]) for r in rows] == [16, 32, 64, 128]


def test_mms_unknown_suite():
    assert main(["mms", "--suite", "nope"]) == 2


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_command():
    assert main([]) == 2


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[time]\ncfl = 1.5\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[physics]\nscenario = zero\n[output]\nfigures = false\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--nx", "8", "--tend", "0.02"]) == 0
    text = (tmp_path / "o" / "config.ini").read_text()
    assert "nx = 8" in text and "T_end = 0.02" in text


def test_solver_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[physics]\nscenario = fluid-free\n[time]\nsolver_tol = 1e-30\nT_end = 0.001\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-figures"]) == 3


def test_underresolved_robin_exit_code(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[grid]\nnx = 4\nny = 4\n[physics]\nkappa = 50\n[time]\nT_end = 0.01\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-figures"]) == 3


def test_blowup_exit_code(tmp_path, monkeypatch):
    import cesim.simulate as sim

    real_run = sim.run

    def exploding(state):
        state.n.values[5, 5] = 1e308

    monkeypatch.setattr(sim, "run", lambda cfg, out, restart=None: real_run(cfg, out, restart, hook=exploding))
    code = main(["run", "--scenario", "no-bacteria", "--out", str(tmp_path / "o"), "--no-figures", "--tend", "0.01"])
    assert code == 1
    assert (tmp_path / "o" / "report.txt").read_text().startswith("status: blowup")


def test_run_writes_figures(tmp_path):
    assert main(["run", "--scenario", "zero", "--out", str(tmp_path), "--tend", "0.02"]) == 0
    for name in ("monitors.png", "fields.png"):
        assert (tmp_path / name).read_bytes()[:4] == b"\x89PNG"
