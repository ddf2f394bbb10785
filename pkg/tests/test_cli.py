import csv
import json

import pytest

from knapfair.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    rc = run_cli(
        "gen",
        "--config",
        '{"kind": "trace_synth", "params": {"n": 60, "mu": 10.0}}',
        "--seed",
        "3",
        "--out",
        str(path),
    )
    assert rc == 0
    return path


class TestGenRun:
    def test_gen_writes_pair(self, trace_file):
        assert trace_file.exists()
        assert trace_file.with_suffix(".meta.json").exists()
        meta = json.loads(trace_file.with_suffix(".meta.json").read_text())
        assert meta["U"] / meta["L"] == pytest.approx(500.0)

    def test_run_policy(self, trace_file, tmp_path, capsys):
        out = tmp_path / "run.json"
        rc = run_cli("run", "--instance", str(trace_file), "--policy", '{"kind": "zcl"}', "--out", str(out))
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["final_value"] > 0
        assert 0 <= payload["final_utilization"] <= 1

    def test_bad_policy_exits_2(self, trace_file, capsys):
        rc = run_cli("run", "--instance", str(trace_file), "--policy", '{"kind": "bogus"}')
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestOracle:
    def test_dp_and_star(self, trace_file, tmp_path):
        out = tmp_path / "oracle.json"
        rc = run_cli("oracle", "--instance", str(trace_file), "--solver", "star", "--out", str(out))
        assert rc == 0
        payload = json.loads(out.read_text())
        assert {"V", "x", "x_plus", "d_star", "epsilon"} <= set(payload["meta"])

    def test_missing_instance_exits_2(self, tmp_path, capsys):
        rc = run_cli("oracle", "--instance", str(tmp_path / "nope.csv"))
        assert rc == 2

    def test_budget_exhaustion_exits_3(self, trace_file, capsys):
        rc = run_cli("oracle", "--instance", str(trace_file), "--cell-budget", "10")
        assert rc == 3
        assert "coarser" in capsys.readouterr().err


class TestAudit:
    def test_audit_config(self, tmp_path):
        out = tmp_path / "audit.json"
        cfg = {
            "policy": {"kind": "zcl"},
            "alpha": 1.0,
            "instances": [
                {"kind": "x_nondecreasing", "params": {"x": 5.0, "m": 50, "N": 8}}
            ],
            "densities": [1.0, 1.5],
        }
        rc = run_cli("audit", "--config", json.dumps(cfg), "--out", str(out))
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["verdict"] == "fail"
        assert payload["witnesses"]
        # witnesses are written out as replayable instance files
        assert list(tmp_path.glob("audit-witness0*.csv"))

    def test_demonstration(self, tmp_path, capsys):
        cfg = {"demonstrate": "small_then_large", "gadget_params": {"w_delta": 0.01}}
        rc = run_cli("audit", "--config", json.dumps(cfg))
        assert rc == 0
        assert "small items" in capsys.readouterr().out


class TestCurvesExperimentSweep:
    def test_curves_csv(self, tmp_path):
        out = tmp_path / "curves.csv"
        cfg = {"L": 1.0, "U": 5.0, "alpha_grid": [0.5, 0.8], "m": 100, "n_points": 6}
        rc = run_cli("curves", "--config", json.dumps(cfg), "--out", str(out))
        assert rc == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["alpha", "lower_bound", "baseline_bound", "ect_empirical"]
        assert len(rows) == 3

    def test_experiment_json_and_csv(self, tmp_path):
        cfg = {
            "policies": [{"kind": "zcl"}, {"kind": "laect", "gamma": 1.0}],
            "generator": {"kind": "trace_synth", "params": {"n": 50, "mu": 10.0}},
            "n_instances": 5,
            "seed": 7,
        }
        out_json = tmp_path / "exp.json"
        rc = run_cli("experiment", "--config", json.dumps(cfg), "--format", "json", "--out", str(out_json))
        assert rc == 0
        payload = json.loads(out_json.read_text())
        assert {p["policy"] for p in payload["policies"]} == {"ZCL", "LA-ECT[1]"}
        out_csv = tmp_path / "exp.csv"
        rc = run_cli("experiment", "--config", json.dumps(cfg), "--out", str(out_csv))
        assert rc == 0
        rows = list(csv.reader(out_csv.open()))
        assert rows[0] == ["policy", "cr", "cdf"]

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        cfg = {"gamma_grid": [0.0, 1.0], "m": 100, "n_points": 6}
        rc = run_cli("sweep", "--config", json.dumps(cfg), "--out", str(out))
        assert rc == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["gamma", "d_hat_choice", "d_hat", "worst_cr", "bound"]
        assert any(r[3] == "inf" for r in rows[1:])  # full trust, bad prediction

    def test_config_from_file(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"gamma_grid": [0.5], "m": 100, "n_points": 5}')
        out = tmp_path / "sweep.csv"
        assert run_cli("sweep", "--config", str(cfg_path), "--out", str(out)) == 0

    def test_invalid_config_exits_2(self, capsys):
        assert run_cli("experiment", "--config", '{"oops": 1}') == 2

    def test_budget_exit_code(self, tmp_path, capsys):
        cfg = {
            "policies": [{"kind": "zcl"}],
            "generator": {"kind": "trace_synth", "params": {"n": 50, "mu": 10.0}},
            "n_instances": 1,
            "seed": 1,
            "cell_budget": 10,
        }
        # budget failures inside experiments are skips, not crashes
        out = tmp_path / "exp.csv"
        rc = run_cli("experiment", "--config", json.dumps(cfg), "--out", str(out))
        assert rc == 0


    def test_threshold_shapes_csv(self, tmp_path):
        out = tmp_path / "thresholds.csv"
        cfg = {
            "kind": "thresholds",
            "L": 1.0,
            "U": 5.0,
            "grid": 64,
            "policies": [
                {"kind": "zcl"},
                {"kind": "ect", "alpha": 0.5},
                {"kind": "laect", "gamma": 0.4, "d_hat": 2.0},
            ],
        }
        rc = run_cli("curves", "--config", json.dumps(cfg), "--out", str(out))
        assert rc == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["policy", "z", "threshold"]
        assert len(rows) == 1 + 3 * 64
        ect = [float(r[2]) for r in rows[1:] if r[0] == "ECT[0.5]"]
        assert min(ect) == 1.0 and max(ect) == pytest.approx(5.0, rel=1e-9)
