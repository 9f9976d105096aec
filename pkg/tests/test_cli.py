import json
import subprocess
import sys

import pytest

from qmoire.cli import main


def qmoire(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "qmoire", *map(str, args)], capture_output=True, text=True, cwd=cwd
    )


def test_help_and_version():
    assert qmoire("--help").returncode == 0
    out = qmoire("--version")
    assert out.returncode == 0 and "qmoire" in out.stdout


def test_beat(capsys):
    assert main(["beat", "1.2", "1.6"]) == 0
    assert capsys.readouterr().out.strip() == "4.8"
    assert main(["beat", "0.8", "0.9"]) == 0
    assert capsys.readouterr().out.strip() == "7.2"
    assert main(["beat", "1.0", "1.0"]) == 0
    assert capsys.readouterr().out.strip() == "inf"
    assert main(["beat", "-1", "1"]) == 1


def test_usage_errors_exit_1():
    assert qmoire().returncode == 1
    assert qmoire("beat", "one", "two").returncode == 1
    assert qmoire("run", "no_such_preset").returncode == 1
    assert qmoire("frobnicate").returncode == 1


def test_config_error_exit_1(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("setup = pump_idler\nwavelength = 3\n")
    out = qmoire("run", cfg, "--out", tmp_path)
    assert out.returncode == 1
    assert "line 2" in out.stderr and "unknown key" in out.stderr


def test_runtime_error_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    out = qmoire("run", "fig3a", "--out", blocker / "sub")
    assert out.returncode == 2
    cfg = tmp_path / "coarse.cfg"
    cfg.write_text(
        "setup = pump_idler\ng1.period = 0.8\ng2.period = 1.2\nscan.steps = 3\n"
        "scan.step.g1 = 0.1\nscan.step.g2 = 0.2\ngrid.pitch = 0.5\ngrid.points = 100\n"
    )
    out = qmoire("run", cfg, "--out", tmp_path)
    assert out.returncode == 2
    assert "sampl" in out.stderr.lower() or "pitch" in out.stderr


def test_run_fit_render(tmp_path):
    out = qmoire("run", "fig3a", "--out", tmp_path)
    assert out.returncode == 0, out.stderr
    csv = tmp_path / "fig3a_analytic.csv"
    assert csv.exists() and (tmp_path / "fig3a_fit.json").exists()
    report = json.loads((tmp_path / "fig3a_fit.json").read_text())
    assert report["fit"]["p1"] == pytest.approx(1.2, rel=1e-3)

    fit = qmoire("fit", csv, "--model", "product")
    assert fit.returncode == 0, fit.stderr
    result = json.loads(fit.stdout)
    assert result["p1"] == pytest.approx(1.2, rel=1e-3)
    assert result["p2"] == pytest.approx(1.6, rel=1e-3)

    env = qmoire("fit", csv, "--model", "envelope", "--period", "4.8", "--fast-period", "1.6")
    assert env.returncode == 0
    assert json.loads(env.stdout)["period"] == pytest.approx(4.8, rel=0.02)

    pgm = tmp_path / "fig1a.pgm"
    render = qmoire("render", "fig1a", "--out", pgm)
    assert render.returncode == 0
    assert pgm.read_bytes().startswith(b"P5\n1200 200\n255\n")


def test_run_mc_and_config_file(tmp_path):
    cfg = tmp_path / "custom.cfg"
    cfg.write_text(
        "setup = signal_idler\ng1.period = 1.6\ng2.period = 1.2\nscan.steps = 40\n"
        "scan.step.g1 = -0.2\nscan.step.g2 = 0.2\nmc.mean_pairs = 1000\nmc.seed = 9\n"
    )
    a = qmoire("run", cfg, "--mode", "mc", "--out", tmp_path / "a")
    b = qmoire("run", cfg, "--mode", "mc", "--out", tmp_path / "b", "--workers", "3")
    assert a.returncode == 0 and b.returncode == 0, a.stderr
    assert (tmp_path / "a" / "custom_mc.csv").read_bytes() == (tmp_path / "b" / "custom_mc.csv").read_bytes()


def test_fit_missing_file(tmp_path):
    assert qmoire("fit", tmp_path / "nope.csv", "--model", "product").returncode == 2
