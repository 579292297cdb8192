import json
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import scalar_riccati_cost
from popovdae.cli import main
from popovdae.models import canonical_fixture
from popovdae.signals import Signal, TimeGrid


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name in ("FIX-A", "FIX-B", "FIX-C", "FIX-ODE", "FIX-NILPOTENT"):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(canonical_fixture(name).to_dict()))
        paths[name] = p

    def weights(key, data):
        p = tmp_path / f"w_{key}.json"
        p.write_text(json.dumps(data))
        paths[key] = p

    weights("ode", {"Q": [[1]], "R": [[1]], "t_f": 1, "steps": 2000})
    weights("input_only", {"Q": [[0, 0], [0, 0]], "N": [[0, 0]], "R": [[1]], "t_f": 1, "steps": 20})
    weights("inf", {"Q": [[1, 0], [0, 1]], "R": [[1]]})
    weights("indefinite", {"Q": [[0]], "R": [[-1]], "t_f": 1, "steps": 10})
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    paths["empty"] = empty
    return paths


def run(*args):
    return main([str(a) for a in args])


def test_analyze(files, tmp_path):
    out = tmp_path / "a"
    assert run("analyze", files["FIX-C"], "--out", out) == 0
    rep = json.loads((out / "analysis.json").read_text())
    assert rep["decomposition"]["r"] == 1
    assert rep["stability"]["verdict"] is True


def test_analyze_index_two(files, tmp_path):
    assert run("analyze", files["FIX-NILPOTENT"], "--out", tmp_path / "b") == 2


def test_analyze_empty_json(files, tmp_path):
    assert run("analyze", files["empty"], "--out", tmp_path / "c") == 3


def test_analyze_missing_file(tmp_path):
    assert run("analyze", tmp_path / "nope.json", "--out", tmp_path) == 3


def test_simulate_raw_forcing(files, tmp_path):
    g = TimeGrid(1.0, 10)
    Signal.constant(g, [0.0, 1.0]).to_csv(tmp_path / "f.csv", "f")
    out = tmp_path / "s"
    assert run("simulate", files["FIX-A"], "--signal", tmp_path / "f.csv", "--raw-f",
               "--t-f", 1, "--steps", 10, "--out", out) == 0
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 2], 1.0, atol=1e-15)
    assert json.loads((out / "mild_residual.json").read_text())["residual"] <= 1e-10


def test_simulate_zero(files, tmp_path):
    out = tmp_path / "z"
    assert run("simulate", files["FIX-C"], "--steps", 5, "--out", out) == 0
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert not data[:, 1:].any()


def test_simulate_dimension_mismatch(files, tmp_path):
    g = TimeGrid(1.0, 10)
    Signal.constant(g, [1.0, 2.0, 3.0]).to_csv(tmp_path / "bad.csv")
    assert run("simulate", files["FIX-A"], "--signal", tmp_path / "bad.csv", "--steps", 10,
               "--out", tmp_path) == 3
    assert run("simulate", files["FIX-A"], "--x0", "1,2,3", "--out", tmp_path) == 3
    assert run("simulate", files["FIX-A"], "--steps", 0, "--out", tmp_path) == 3


def heat_residual(tmp_path, N, m):
    out = tmp_path / f"heat{N}_{m}"
    assert run("heat", "--N", N, "--out", out) == 0
    g = TimeGrid(1.0, m)
    Signal.constant(g, [1.0]).to_csv(out / "u.csv")
    assert run("simulate", out / "heat_system.json", "--signal", out / "u.csv",
               "--t-f", 1, "--steps", m, "--out", out) == 0
    return json.loads((out / "mild_residual.json").read_text())["residual"], g.dt


def test_simulate_heat(tmp_path):
    # the first-order constant scales with the stiffness of the grid (about N)
    res, dt = heat_residual(tmp_path, 5, 200)
    assert res <= 5 * dt
    r1, _ = heat_residual(tmp_path, 20, 200)
    r2, _ = heat_residual(tmp_path, 20, 400)
    assert r1 / r2 >= 2 ** 0.9


def test_lqr_riccati(files, tmp_path):
    out = tmp_path / "l"
    assert run("lqr", files["FIX-ODE"], "--weights", files["ode"], "--x0", "1", "--out", out) == 0
    sol = json.loads((out / "solution.json").read_text())
    ref = scalar_riccati_cost(-1, 1, 1, 1, 1, 1.0, 1.0)
    assert abs(sol["cost"] - ref) <= 1e-3 * ref
    for f in ("u_opt.csv", "y_opt.csv", "x_opt.csv"):
        assert (out / f).exists()


def test_lqr_input_only(files, tmp_path):
    out = tmp_path / "l"
    assert run("lqr", files["FIX-A"], "--weights", files["input_only"], "--x0", "1,1",
               "--out", out) == 0
    data = np.loadtxt(out / "u_opt.csv", delimiter=",", skiprows=1)
    assert not data[:, 1].any()


def test_lqr_infinite(files, tmp_path):
    out = tmp_path / "inf"
    assert run("lqr", files["FIX-A"], "--weights", files["inf"], "--infinite", "--x0", "1,0",
               "--out", out) == 0
    assert "truncation" in json.loads((out / "solution.json").read_text())
    assert run("lqr", files["FIX-B"], "--weights", files["inf"], "--infinite", "--x0", "1,0",
               "--out", out) == 5


def test_lqr_not_coercive(files, tmp_path):
    assert run("lqr", files["FIX-ODE"], "--weights", files["indefinite"], "--x0", "1",
               "--out", tmp_path) == 4


def test_lqr_bad_weights(files, tmp_path):
    assert run("lqr", files["FIX-ODE"], "--weights", files["empty"], "--x0", "1",
               "--out", tmp_path) == 3


def test_heat(tmp_path):
    assert run("heat", "--N", 50, "--L", 1, "--alpha", 1, "--k", 1, "--iu", "0,1", "--iy", "0,1",
               "--out", tmp_path) == 0
    checks = json.loads((tmp_path / "heat_checks.json").read_text())["resolvent_residuals"]
    assert set(checks) == {"0.0", "1.0", "10.0"}
    assert all(v["residual"] <= 1e-10 for v in checks.values())
    assert json.loads((tmp_path / "heat_system.json").read_text())["E"]


@pytest.mark.parametrize("args", [["--N", 1], ["--iu", "0.9,0.1"], ["--iy", "abc"]])
def test_heat_invalid(tmp_path, args):
    assert run("heat", *args, "--out", tmp_path) == 3


def test_deterministic_outputs(files, tmp_path):
    blobs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert run("analyze", files["FIX-C"], "--out", out, "--seed", 7) == 0
        assert run("lqr", files["FIX-A"], "--weights", files["inf"], "--infinite",
                   "--x0", "1,0.5", "--out", out, "--seed", 7) == 0
        blobs.append([(out / f).read_bytes() for f in sorted(os.listdir(out))])
    assert len(blobs[0]) == 5
    assert blobs[0] == blobs[1]


def test_module_entry_point_with_thread_cap(files, tmp_path):
    env = dict(os.environ, POPOVDAE_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "popovdae", "analyze", str(files["FIX-A"]),
                           "--out", str(tmp_path)], env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
