import os

import numpy as np
import pytest
import yaml

import pcnflow as pf
from pcnflow.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def summary_dict(out):
    entries = {}
    for line in out.strip().splitlines():
        if ": " in line:
            key, value = line.split(": ", 1)
            entries[key] = value
    return entries


class TestListAndEmit:
    def test_list_scenarios(self, capsys):
        code, out, _ = run_cli(capsys, "list-scenarios")
        assert code == 0
        for name in ("ring3", "line3-deadlock", "ring5"):
            assert name in out

    def test_emit_matches_builtin(self, capsys):
        code, out, _ = run_cli(capsys, "emit-scenario", "ring5")
        assert code == 0
        assert pf.parse_scenario(yaml.safe_load(out)) == pf.builtin_scenario("ring5")

    def test_emit_to_file_then_load(self, capsys, tmp_path):
        path = tmp_path / "ring3.yaml"
        code, _, _ = run_cli(capsys, "emit-scenario", "ring3", "--out", str(path))
        assert code == 0
        assert pf.load_scenario(path) == pf.builtin_scenario("ring3")

    def test_emit_unknown_name(self, capsys):
        code, _, err = run_cli(capsys, "emit-scenario", "nope")
        assert code == 2
        assert "unknown scenario" in err


class TestRun:
    def test_run_writes_trace_and_summary(self, capsys, tmp_path):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys,
            "run", "ring3", "--horizon", "40", "--out-dir", str(out_dir),
        )
        assert code == 0
        entries = summary_dict(out)
        assert entries["scenario"] == "ring3"
        assert entries["slots"] == "40"
        assert entries["total_resets"] == "0"
        assert os.path.exists(out_dir / "trace.csv")
        assert os.path.exists(out_dir / "resets.csv")
        columns = pf.load_trace_csv(out_dir / "trace.csv")
        assert len(columns["slot"]) == 40

    def test_byte_identical_reruns(self, capsys, tmp_path):
        args = ["run", "ring3", "--horizon", "30", "--demand-mode", "poisson", "--seed", "5"]
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        assert run_cli(capsys, *args, "--out-dir", str(a_dir))[0] == 0
        assert run_cli(capsys, *args, "--out-dir", str(b_dir))[0] == 0
        assert (a_dir / "trace.csv").read_bytes() == (b_dir / "trace.csv").read_bytes()
        assert (a_dir / "resets.csv").read_bytes() == (b_dir / "resets.csv").read_bytes()

    def test_flag_overrides_are_echoed_and_applied(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys,
            "run", "ring3",
            "--gamma", "0.02",
            "--horizon", "7",
            "--seed", "11",
            "--max-hops", "1",
            "--stop-tol", "0.5",
            "--out-dir", str(tmp_path / "o"),
        )
        assert code == 0
        entries = summary_dict(out)
        assert entries["gamma"] == "0.02"
        assert entries["horizon"] == "7"
        assert entries["seed"] == "11"
        assert entries["max_hops"] == "1"
        assert entries["stop_tol"] == "0.5"
        columns = pf.load_trace_csv(tmp_path / "o" / "trace.csv")
        # max hops 1 leaves each ring3 pair a single direct route
        assert "flow.A-B.1" not in columns
        assert len(columns["slot"]) == 7

    def test_eta_override_changes_dynamics(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys,
            "run", "ring3", "--eta", "0", "--horizon", "30",
            "--out-dir", str(tmp_path / "e"),
        )
        assert code == 0
        columns = pf.load_trace_csv(tmp_path / "e" / "trace.csv")
        flows = np.array(columns["flow.A-B.0"])
        assert set(np.unique(flows)) <= {0.0, 10.0}  # bang-bang routing without eta

    def test_zero_horizon(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "run", "ring3", "--horizon", "0", "--out-dir", str(tmp_path / "z")
        )
        assert code == 0
        columns = pf.load_trace_csv(tmp_path / "z" / "trace.csv")
        assert columns["slot"] == []

    def test_divergence_exit_code(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys,
            "run", "line3-deadlock", "--gamma", "1e12", "--horizon", "20",
            "--out-dir", str(tmp_path / "d"),
        )
        assert code == 3
        assert "price norm" in err

    def test_validation_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("name: x\nnodes: [A]\nchannels: []\ndemands: []\nbogus: 1\n")
        code, _, err = run_cli(capsys, "run", str(bad))
        assert code == 2
        assert "unknown keys" in err

    def test_io_exit_code(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, err = run_cli(
            capsys, "run", "ring3", "--horizon", "5", "--out-dir", str(blocker)
        )
        assert code == 4


class TestVerify:
    def test_deadlock_with_regularizer(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "verify", "line3-deadlock", "--eta", "0.1", "--horizon", "4000",
            "--iterations", "4000",
        )
        assert code == 0
        entries = summary_dict(out)
        assert abs(float(entries["duality_gap"])) <= 1e-3
        assert float(entries["primal_value"]) == pytest.approx(5.0, abs=1e-3)
        assert float(entries["max_flow_deviation"]) <= 1e-2

    def test_zero_demand_gap_is_zero(self, capsys, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text(
            "name: empty\nnodes: [A, B]\nchannels: [{u: A, v: B, capacity: 10.0}]\n"
            "demands: []\n"
        )
        code, out, _ = run_cli(capsys, "verify", str(path))
        assert code == 0
        entries = summary_dict(out)
        assert float(entries["primal_value"]) == 0.0
        assert float(entries["dual_value"]) == 0.0
        assert float(entries["duality_gap"]) == 0.0

    def test_oracle_guard_exit(self, capsys, tmp_path):
        nodes = ["A", "B", "C", "D"]
        channels = [
            {"u": u, "v": v, "capacity": 50.0}
            for k, u in enumerate(nodes)
            for v in nodes[k + 1 :]
        ]
        demands = [
            {
                "i": i,
                "j": j,
                "amount": 1.0,
                "utility_family": "linear",
                "utility_params": [1.0],
                "eta": 0.5,
            }
            for i, j in [("A", "B"), ("A", "C"), ("A", "D"), ("B", "C"), ("B", "D")]
        ]
        doc = {"name": "big", "nodes": nodes, "channels": channels, "demands": demands}
        path = tmp_path / "big.yaml"
        path.write_text(yaml.safe_dump(doc))
        code, _, err = run_cli(capsys, "verify", str(path))
        assert code == 2
        assert "oracle" in err


class TestCheck:
    def test_ring3_defaults(self, capsys):
        code, out, _ = run_cli(capsys, "check", "ring3")
        assert code == 0
        entries = summary_dict(out)
        assert entries["capacity_ok"] == "true"
        assert entries["stepsize_ok"] == "true"
        assert float(entries["operator_norm"]) == pytest.approx(np.sqrt(5), rel=1e-6)

    def test_tight_capacity_lists_offenders(self, capsys, tmp_path):
        scenario = pf.builtin_scenario("ring3")
        from dataclasses import replace

        tight = replace(
            scenario, channels=tuple((u, v, 20.0) for u, v, _ in scenario.channels)
        )
        path = tmp_path / "tight.yaml"
        path.write_text(pf.serialize_scenario(tight))
        code, out, _ = run_cli(capsys, "check", str(path))
        assert code == 0
        entries = summary_dict(out)
        assert entries["capacity_ok"] == "false"
        assert "ok=false" in out

    def test_eta_zero_not_applicable(self, capsys):
        code, out, _ = run_cli(capsys, "check", "line3-deadlock")
        assert code == 0
        assert "stepsize_ok: not applicable (eta=0)" in out
