from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from dyadic_transport import cli
from dyadic_transport.lr import LrParams, nested_block_time


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def test_feasibility_exit_codes(tmp_path):
    code, out = run(tmp_path, "feasibility", "--p", "1.2", "--r", "1.5")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["feasible"] and doc["margin"] == pytest.approx(1 / 6)
    code, out = run(tmp_path, "feasibility", "--p", "2", "--r", "2")
    assert code == 2 and json.loads(out.read_text())["feasible"] is False
    assert cli.main(["feasibility", "--p", "0.5", "--r", "2"]) == 1


def test_norm_series_csv_is_deterministic(tmp_path):
    argv = ["norm-series", "--mode", "l1", "--times", "6", "--depth", "4", "--grid", "32"]
    _, a = run(tmp_path, *argv)
    first = a.read_bytes()
    _, b = run(tmp_path, *argv)
    assert b.read_bytes() == first
    rows = list(csv.DictReader(first.decode("utf-8").splitlines()))
    assert list(rows[0]) == list(cli.CSV_COLUMNS)
    times = [float(r["t"]) for r in rows]
    assert times == sorted(times) and len(set(times)) == 6
    assert all(float(r["mass"]) == 1.0 for r in rows)


def test_norm_series_workers_match(tmp_path, monkeypatch):
    argv = ["norm-series", "--mode", "lr", "--times", "4", "--depth", "3", "--grid", "16", "--format", "json"]
    _, a = run(tmp_path, *argv)
    serial = json.loads(a.read_text())["records"]
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    _, b = run(tmp_path, *argv)
    assert json.loads(b.read_text())["records"] == serial
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert cli.main(argv) == 1


def test_block_series_velocity_in_middle_third(tmp_path):
    _, out = run(tmp_path, "norm-series", "--mode", "block", "--times", "6", "--grid", "1024")
    rows = list(csv.DictReader(out.read_text().splitlines()))
    for r in rows:
        t, w = float(r["t"]), float(r["w1p"])
        assert (w > 0) == (1 / 3 < t < 2 / 3)


def test_snapshot_pgm(tmp_path):
    code, out = run(tmp_path, "snapshot", "--mode", "lr", "--t", "1.0", "--grid", "8")
    assert code == 0
    data = out.read_bytes()
    assert data.startswith(b"P5\n8 8\n255\n")
    assert set(data[len(b"P5\n8 8\n255\n") :]) == {255}
    assert cli.main(["snapshot", "--mode", "lr", "--d", "3", "--t", "0.5", "--grid", "8", "--out", str(tmp_path / "x")]) == 1


def test_snapshot_initial_pattern_and_asynchronous_break():
    model = cli.lr_model(LrParams(depth=4))
    start = cli.raster(model, 0.0, 64)
    assert set(np.unique(start)) == {0.0, 2.0**4.6}
    t = nested_block_time(LrParams(), 1, 1, 0.01)  # just after the first slot starts spreading
    snap = cli.raster(model, t, 256)
    cells = snap.reshape(4, 64, 4, 64).transpose(0, 2, 1, 3).reshape(16, -1)
    changed = [k for k in range(16) if not np.array_equal(cells[k], cells[15 if k != 15 else 14])]
    assert len(changed) == 1  # exactly one cell differs from the untouched ones


def test_eval_json(tmp_path):
    code, out = run(tmp_path, "eval", "--mode", "l1", "--t", "0.3", "--x", "0.1,-0.2", "--depth", "4")
    doc = json.loads(out.read_text())
    assert code == 0
    assert set(doc) >= {"velocity", "jacobian", "density", "phase_trace"}
    assert doc["phase_trace"][0][1] in ("E", "O")


def test_verify_suites(tmp_path):
    code, out = run(tmp_path, "verify", "contraction", "--p", "1.2", "--r", "1.5")
    assert code == 0 and out.read_text().startswith("PASS")
    code, out = run(tmp_path, "verify", "divergence", "--mode", "lr", "--times", "20", "--format", "json")
    doc = json.loads(out.read_text())
    assert code == 0 and doc["passed"]
    code, _ = run(tmp_path, "verify", "mass", "--mode", "l1", "--times", "5", "--depth", "4")
    assert code == 0
    with pytest.raises(SystemExit):
        cli.main(["verify", "nonsense"])


def test_reversed_pair_time_symmetry():
    base = cli.lr_model(LrParams(depth=3))
    rev = cli.reversed_model(base)
    x = np.random.default_rng(0).uniform(-0.5, 0.5, (50, 2))
    v, j = base.velocity(0.7, x)
    rv, rj = rev.velocity(0.3, x)
    assert np.array_equal(rv, -v) and np.array_equal(rj, -j)
    assert rev.density_cubes(0.0).mass() == 1


def test_stable_times_respect_stencil():
    model = cli.lr_model(LrParams(depth=6))
    for t in cli.stable_times(10, model, 1e-4):
        assert model.signature(t - 1e-4) == model.signature(t) == model.signature(t + 1e-4)
