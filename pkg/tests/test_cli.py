import csv
import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from impactqp.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main
from impactqp.scenario import CSV_SCHEMA

from oracles import ref_zmp
from test_scenario import arm_tap_doc

STATES = resources.files("impactqp") / "data" / "states"


def read_csv(path):
    with open(path) as fh:
        header = fh.readline()
        return header, list(csv.DictReader(fh))


def test_toy2dof_reports_and_writes(tmp_path, capsys):
    assert main(["toy2dof", "--out", str(tmp_path)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[baseline] post-impact qd=[-0.618, 1.345]" in text
    assert "[impact_aware] post-impact qd=[-0.2811, 0.6]" in text
    header, rows = read_csv(tmp_path / "toy2dof.csv")
    assert header.startswith(f"# impactqp-csv schema={CSV_SCHEMA} kind=toy2dof")
    assert [r["mode"] for r in rows] == ["baseline", "impact_aware"]
    assert float(rows[1]["post_qd_1"]) == pytest.approx(0.6, abs=1e-6)


def test_predict_toy_state(tmp_path):
    assert main(["predict", "--state", str(STATES / "toy2dof.json"), "--out", str(tmp_path)]) == EXIT_OK
    header, rows = read_csv(tmp_path / "toy2dof_predict.csv")
    assert "kind=predict" in header
    jump = [float(r["value"]) for r in rows if r["quantity"] == "joint_velocity"]
    assert np.allclose(jump, [-0.612, 0.612], atol=1e-9)
    impulse = [float(r["value"]) for r in rows if r["quantity"] == "impulse"]
    assert impulse[1] < 0  # pushes the tip back out of the wall


def test_predict_at_rest_is_zero(tmp_path):
    doc = json.loads((STATES / "toy2dof.json").read_text())
    doc["qd"] = [0.0, 0.0]
    path = tmp_path / "rest.json"
    path.write_text(json.dumps(doc))
    assert main(["predict", "--state", str(path), "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "rest_predict.csv")
    assert all(float(r["value"]) == 0.0 for r in rows)


def test_predict_humanoid_zmp_jump_matches_moment_balance(tmp_path):
    src = STATES / "humanoid_push.json"
    assert main(["predict", "--state", str(src), "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "humanoid_push_predict.csv")
    dW = np.array([float(r["value"]) for r in rows if r["quantity"] == "wrench"])
    dz = np.array([float(r["value"]) for r in rows if r["quantity"] == "zmp_jump"])
    doc = json.loads(src.read_text())
    W, n, o = np.array(doc["wrench"]), np.array([0, 0, 1.0]), np.array(doc["zmp_origin"])
    # torque-shift form: the ZMP of [f + Δf; Δτ] measured from the origin
    assert np.allclose(dz, ref_zmp(np.r_[W[:3] + dW[:3], dW[3:]], n, o) - o, atol=1e-9)
    # the full ZMP difference adds the pre-impact torque seen through the changed normal force
    fn, fn_post = n @ W[:3], n @ (W[:3] + dW[:3])
    shift = np.cross(n, W[3:]) * (1 / fn_post - 1 / fn)
    assert np.allclose(ref_zmp(W + dW, n, o) - ref_zmp(W, n, o), dz + shift, atol=1e-9)


def test_run_wall_push_succeeds(tmp_path, capsys):
    assert main(["run", "--scenario", "wall_push", "--out", str(tmp_path)]) == EXIT_OK
    assert "VIOLATION" not in capsys.readouterr().out
    assert (tmp_path / "wall_push_aware_steps.csv").is_file()
    header, rows = read_csv(tmp_path / "wall_push_aware_events.csv")
    assert "kind=events" in header and rows


def test_impossible_bounds_is_infeasible(tmp_path):
    assert main(["run", "--scenario", "impossible_bounds", "--out", str(tmp_path)]) == EXIT_INFEASIBLE


def test_bad_input_exit_codes(tmp_path):
    assert main(["run", "--scenario", "no_such_scenario", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["predict", "--state", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["run", "--scenario", "wall_push", "--seed", "-1"]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "planar_2r", "q": [0.0]}))
    assert main(["predict", "--state", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_repeated_runs_are_byte_identical(tmp_path):
    doc = tmp_path / "arm_tap.json"
    doc.write_text(json.dumps(arm_tap_doc()))
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["run", "--scenario", str(doc), "--out", str(out)]) == EXIT_OK
        outs.append(out)
    for name in ("arm_tap_aware_steps.csv", "arm_tap_aware_events.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "impactqp.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("impactqp")
