import hashlib
import json
import subprocess
import sys

import pytest

from uavshare.cli import main
from uavshare.scenario import bundled_path

TABLE1 = str(bundled_path("paper_table1.json"))
EXPERIMENT = str(bundled_path("paper_experiment.json"))
FAST = ["--resolution", "50", "--no-figures", "-q"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_evaluate_golden(tmp_path, capsys):
    code, out, _ = run(capsys, "evaluate", "--scenario", TABLE1, "--gs", "500,500",
                       "--altitude", "30", "--out", tmp_path)
    assert code == 0
    assert out == "1.000000\n"
    assert {p.name for p in tmp_path.iterdir()} == {"map.csv", "map.pgm", "map.png", "summary.json"}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["result"]["flyable_ratio"] == 1.0
    assert summary["result"]["points"] == 10_000
    assert (tmp_path / "map.pgm").read_bytes() == b"P5\n100 100\n255\n" + b"\xff" * 10_000
    assert len((tmp_path / "map.csv").read_text().splitlines()) == 10_001


def test_missing_scenario_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code, _, err = run(capsys, "evaluate", "--scenario", missing, "--out", tmp_path)
    assert code == 4
    assert str(missing) in err


def test_zero_altitude_is_validation_error(tmp_path, capsys):
    code, _, err = run(capsys, "evaluate", "--scenario", TABLE1, "--altitude", "0",
                       "--out", tmp_path)
    assert code == 3
    assert "altitude" in err


def test_gs_outside_area(tmp_path, capsys):
    code, _, _ = run(capsys, "evaluate", "--scenario", TABLE1, "--gs", "2000,0", "--out", tmp_path)
    assert code == 3


@pytest.mark.parametrize("argv", [
    [], ["evaluate"], ["evaluate", "--scenario", TABLE1, "--gs", "1"], ["bogus"],
])
def test_usage_errors(argv, capsys):
    assert run(capsys, *argv)[0] == 2


def test_gs_and_optimize_are_exclusive(tmp_path, capsys):
    code, _, _ = run(capsys, "allocate", "--scenario", TABLE1, "--gs", "10,10", "--optimize-gs",
                     "--out", tmp_path, *FAST)
    assert code == 2


def test_optimize_zero_routers_picks_centre(tmp_path, capsys):
    code, out, _ = run(capsys, "optimize-gs", "--scenario", TABLE1, "--candidate-resolution",
                       "100", "--out", tmp_path, *FAST)
    assert code == 0
    assert out == "1.000000 500,500\n"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["result"]["candidates"]["ratios"]) == 11


def test_allocate_three_uavs_on_experiment(tmp_path, capsys):
    code, out, _ = run(capsys, "allocate", "--scenario", EXPERIMENT, "--uavs", "3",
                       "--out", tmp_path, *FAST)
    assert code == 0
    ratio = float(out)
    summary = json.loads((tmp_path / "summary.json").read_text())
    result = summary["result"]
    assert result["combined_ratio"] == pytest.approx(ratio, abs=1e-6)
    assert len(result["sub_areas"]) == 3
    assert result["combined_ratio"] >= result["best_fixed_pair"]["flyable_ratio"]
    assert summary["parameters"]["seed"] == {"value": 2022, "source": "file"}
    assert len(summary["scenario"]["routers"]) == 4


def test_parameter_precedence_echo(tmp_path, capsys):
    run(capsys, "evaluate", "--scenario", EXPERIMENT, "--seed", "3", "--mode", "conventional",
        "--out", tmp_path, *FAST)
    params = json.loads((tmp_path / "summary.json").read_text())["parameters"]
    assert params["seed"] == {"value": 3, "source": "flag"}
    assert params["mode"] == {"value": "conventional", "source": "flag"}
    assert params["resolution_m"] == {"value": 50.0, "source": "flag"}
    assert params["altitude_m"] == {"value": 30.0, "source": "file"}
    assert params["trial"] == {"value": 0, "source": "default"}


def test_render_reproduces_raster(tmp_path, capsys):
    out = tmp_path / "eval"
    assert run(capsys, "evaluate", "--scenario", EXPERIMENT, "--out", out, *FAST)[0] == 0
    code, _, _ = run(capsys, "render", out / "map.csv", "-o", tmp_path / "again.pgm")
    assert code == 0
    assert (tmp_path / "again.pgm").read_bytes() == (out / "map.pgm").read_bytes()


def test_render_missing_input(tmp_path, capsys):
    assert run(capsys, "render", tmp_path / "none.csv")[0] == 4


def test_monte_carlo_small_is_deterministic(tmp_path, capsys):
    argv = ["monte-carlo", "--scenario", EXPERIMENT, "--trials", "2", "--seed", "7",
            "--candidate-resolution", "250", "--uavs", "2", "-q", "--resolution", "50"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, *argv, "--out", a)[0] == 0
    assert run(capsys, *argv, "--out", b, "--threads", "0")[0] == 0
    for name in ("trials.csv", "summary.json", "modes.png"):
        assert digest(a / name) == digest(b / name), name
    rows = (a / "trials.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[0].startswith("trial,proposed_ratio")


@pytest.mark.slow
def test_monte_carlo_thirty_trials_twice(tmp_path, capsys):
    argv = ["monte-carlo", "--scenario", EXPERIMENT, "--trials", "30", "--seed", "7",
            "--threads", "0", "-q"]
    a, b = tmp_path / "a", tmp_path / "b"
    out_a = run(capsys, *argv, "--out", a)
    out_b = run(capsys, *argv, "--out", b)
    assert out_a[0] == out_b[0] == 0 and out_a[1] == out_b[1]
    for name in ("trials.csv", "summary.json", "modes.png"):
        assert digest(a / name) == digest(b / name), name


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "uavshare.cli", "evaluate", "--scenario", TABLE1,
                           "--out", str(tmp_path), *FAST], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "1.000000\n"
