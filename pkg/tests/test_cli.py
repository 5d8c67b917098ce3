import json
import subprocess
import sys

import yaml

from sasakigraph.cli import main

SMALL = {"grid": {"N_x": 16, "N_theta": 32}}


def _config(tmp_path, extra=None):
    data = {**SMALL, **(extra or {})}
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(data))
    return p


def test_scenario_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["scenario", "theorem1", "--config", str(_config(tmp_path)), "--output", str(out)])
    assert code == 0
    assert "theorem1: pass" in capsys.readouterr().out
    d = out / "theorem1"
    result = json.loads((d / "result.json").read_text())
    assert result["status"] == "pass" and result["format_version"] == 1
    for name in ("u_explicit.bin", "u_explicit.csv", "u_explicit_fiber_profile.png", "u_explicit_base_profile.png"):
        assert (d / name).exists()
    assert (out / "effective_config.yaml").exists()


def test_growth_scenario_report_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["scenario", "growth_solves", "--config", str(_config(tmp_path)), "--output", str(out)]) == 0
    d = out / "growth_solves"
    for stem in ("vertical", "horizontal"):
        for suffix in ("_report.json", "_obstruction.json", "_monitors.csv", "_monitors.png",
                       "_u.bin", "_residual_hist.csv", "_residual_hist.png", "_shell_profile.png"):
            assert (d / f"{stem}{suffix}").exists(), stem + suffix


def test_verify_command(tmp_path, capsys):
    cfg = _config(tmp_path, {"scenarios": {"verify_points": 3}})
    assert main(["verify", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    assert "identities: pass" in capsys.readouterr().out


def test_obstructed_solve_writes_certificate(tmp_path, capsys):
    cfg = _config(tmp_path, {"prescription": {"kind": "radial_power", "c": 0.5, "p": -1.0}})
    out = tmp_path / "o"
    assert main(["solve-vertical", "--config", str(cfg), "--output", str(out)]) == 1
    err = capsys.readouterr().err
    assert "obstruction_detected" in err
    cert = json.loads((out / "vertical_obstruction.json").read_text())
    assert cert["obstructed"] is True and cert["sign"] == -1
    assert (out / "vertical_shell_profile.png").exists()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _config(tmp_path, {"prescription": {"r1": 1.5, "r2": 2.0}})
    assert main(["solve-vertical", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 2
    assert "r1 <= 1" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["scenario", "--config", str(tmp_path / "none.yaml")]) == 2


def test_solve_binaries_bit_identical(tmp_path):
    cfg = _config(tmp_path, {"m": 3, "prescription": {"kind": "expression",
                                                      "expr": "2*(2 - rho + 0.2*sin(x1))/rho",
                                                      "r1": 0.8, "r2": 1.2}})
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["solve-vertical", "--config", str(cfg), "--output", str(out)]) == 0
        blobs.append((out / "vertical_u.bin").read_bytes())
    assert blobs[0] == blobs[1]


def test_console_script_with_threads_env(tmp_path):
    env = {"SASAKIGRAPH_THREADS": "1", "PATH": "/usr/bin:/bin"}
    import os

    env = {**os.environ, **env}
    out = tmp_path / "o"
    proc = subprocess.run(
        [sys.executable, "-m", "sasakigraph.cli", "scenario", "sphere_baseline",
         "--config", str(_config(tmp_path)), "--output", str(out)],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert "sphere_baseline: pass" in proc.stdout


def test_failing_summary_lists_names(capsys):
    from sasakigraph.cli import _summary
    from sasakigraph.scenarios import ScenarioResult

    ok, bad = ScenarioResult("good"), ScenarioResult("bad")
    bad.check("x", 2.0, "<", 1.0)
    assert _summary([ok, bad]) == 1
    cap = capsys.readouterr()
    assert "bad: fail (failed: x)" in cap.out
    assert "failing: bad" in cap.err
