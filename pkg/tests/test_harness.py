"""
End-to-end tests of the command-line harness.
"""

import json

import pandas as pd
import pytest

import experiment_coordinator
from errors import NoConvergence
from harness import build_parser, main


def test_integrate_writes_trajectory_table(tmp_path):
    out = tmp_path / "pendulum.csv"
    code = main(["integrate", "--system", "pendulum", "--method", "svi-mid-trap",
                 "--h", "0.1", "--T", "1", "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["step", "t", "q_1", "p_1", "energy", "energy_error"]
    assert len(frame) == 11
    assert frame["t"].iloc[-1] == pytest.approx(1.0)
    assert frame["energy_error"].iloc[0] == 0.0
    assert frame["energy_error"].abs().max() < 1e-2


def test_output_dir_and_json_format(tmp_path):
    code = main(["integrate", "--system", "sho", "--method", "baseline-srk4-gauss2", "--h", "0.5",
                 "--T", "2", "--format", "json", "--out", "run.json", "--output-dir", str(tmp_path)])
    assert code == 0
    document = json.loads((tmp_path / "run.json").read_text())
    assert len(document["rows"]) == 5
    assert document["rows"][0]["q_1"] == 1.0


def test_integrate_to_stdout(capsys):
    assert main(["integrate", "--system", "free-particle", "--method", "galerkin-s1-trap", "--h", "0.5", "--T", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("step,t,q_1,p_1")
    assert len(lines) == 4


def test_converge_reports_slope(tmp_path):
    out = tmp_path / "order.csv"
    code = main(["converge", "--system", "sho", "--method", "baseline-srk-implicit-midpoint",
                 "--h-list", "0.2,0.1,0.05", "--T", "1", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "h,global_error"
    trailer = [line for line in lines if line.startswith("# slope=")]
    assert len(trailer) == 1
    assert float(trailer[0].split("=", 1)[1]) == pytest.approx(2.0, abs=0.2)


def test_rigidbody_writes_summary(tmp_path):
    out = tmp_path / "rigid.csv"
    code = main(["rigidbody", "--h", "0.2", "--T", "2", "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert set(frame["method"]) == {
        "lgvi-exp",
        "lgvi-cayley",
        "baseline-rk-explicit-midpoint",
        "baseline-srk-implicit-midpoint",
        "baseline-lgm-crouch-grossman",
    }
    assert {"energy_error", "ortho_error", "momentum_error", "newton_iters"} <= set(frame.columns)
    summary = pd.read_csv(tmp_path / "rigid_summary.csv").set_index("method")
    assert summary.loc["lgvi-exp", "max_ortho_error"] < 1e-12
    assert summary.loc["lgvi-exp", "max_momentum_error"] < 1e-11
    assert summary.loc["baseline-rk-explicit-midpoint", "max_ortho_error"] > 1e-10
    bands = summary["momentum_energy_band"]
    assert bands["lgvi-exp"] <= bands["baseline-lgm-crouch-grossman"]
    assert "wall_time" not in summary.columns


@pytest.mark.parametrize(
    "argv",
    [
        ["integrate", "--system", "pendulum", "--method", "rk5"],
        ["integrate", "--h", "-0.1"],
        ["integrate", "--h", "fast"],
        ["integrate", "--colour", "red"],
        ["converge", "--h-list", "0.1,0.05"],
        ["integrate", "--system", "rigid-body", "--method", "lgvi-exp", "--h", "0.6", "--T", "1"],
        ["rigidbody", "--h", "0.6", "--T", "3"],
        ["simulate"],
        [],
    ],
)
def test_invalid_specifications_exit_with_3(argv):
    assert main(argv) == 3


def test_solver_failure_exits_with_2(monkeypatch):
    def fail(self, spec, method, h):
        raise NoConvergence(50, 1.0)

    monkeypatch.setattr(experiment_coordinator.ExperimentCoordinator, "_simulate", fail)
    assert main(["integrate", "--system", "pendulum", "--method", "svi-mid-trap", "--T", "1"]) == 2


def test_unexpected_failure_exits_with_1(monkeypatch):
    def fail(self, spec, method, h):
        raise RuntimeError("disk full")

    monkeypatch.setattr(experiment_coordinator.ExperimentCoordinator, "_simulate", fail)
    assert main(["integrate", "--T", "1"]) == 1


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("integrate", "converge", "energy", "rigidbody"):
        args = parser.parse_args([command, "--h", "0.1"])
        assert args.command == command
        assert args.h == 0.1
        assert args.compensated is None


def test_identical_runs_write_identical_files(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert main(["integrate", "--system", "two-particle", "--method", "svi-rk4-simpson",
                     "--h", "0.1", "--T", "1", "--seed", "7", "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_repeated_rigidbody_runs_write_identical_summaries(tmp_path):
    for name in ("a", "b"):
        assert main(["rigidbody", "--h", "0.2", "--T", "1", "--out", str(tmp_path / f"{name}.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() == (tmp_path / "b_summary.csv").read_bytes()
