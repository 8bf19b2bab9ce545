import json
from pathlib import Path

import pytest

from neuromimetic import cli

FIXTURE = str(Path(cli.__file__).parent / "data" / "design_fixture.json")


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    reports = list(out.glob("*.report.json"))
    body = json.loads(reports[0].read_text()) if reports else None
    return code, body, out


def test_design_bundled_fixture(tmp_path):
    code, body, _ = run(tmp_path, "design")
    assert code == 0
    assert body["payload"]["resilience"]["failures"] == []
    assert set(body["payload"]) >= {"K", "E", "hatA1", "hatA2"}


def test_design_missing_c_is_config_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"A": [[0, 1], [2, -1]], "B": [[1, 0, 1, 1], [0, 1, 1, -1]], "I1": [1, 2], "I2": [1, 2]}))
    code, body, _ = run(tmp_path, "design", "--config", str(cfg))
    assert code == 2 and "missing matrix C" in body["payload"]["message"]


def test_design_minor_warning(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    B = [[1, 0, -1, 0], [0, 1, 0, -1]]
    C = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    cfg.write_text(json.dumps({"A": [[0, 1], [2, -1]], "B": B, "C": C, "I1": [1, 2], "I2": [1, 2]}))
    code, _, _ = run(tmp_path, "design", "--config", str(cfg))
    assert code == 0 and "minor check failed for B" in capsys.readouterr().err
    code, body, _ = run(tmp_path, "design", "--config", str(cfg), "--strict-minors")
    assert code == 3 and body["status"] == "failed"


def test_infeasible_invariance_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"A": [[0, 1], [2, -1]], "B": [[1, 0, -1, 0], [0, 1, 0, -1]],
                               "C": [[1, 0], [0, 1], [1, 1], [1, -1]], "I1": [1, 3], "I2": [1, 2]}))
    code, body, _ = run(tmp_path, "design", "--config", str(cfg))
    assert code == 3 and body["payload"]["error"] == "InfeasibleInvariance"


def test_simulate_csv(tmp_path):
    code, body, out = run(tmp_path, "simulate", "--config", FIXTURE, "--format", "csv")
    assert code == 0 and body["payload"]["e_ratio"] < 1e-6
    assert (out / "trajectory.csv").read_text().startswith("t,x1,x2,z1,z2,e_norm")


def test_alphabet_and_entropy(tmp_path):
    code, body, _ = run(tmp_path, "alphabet")
    assert code == 0 and body["payload"]["distinct"] == 25
    code, body, _ = run(tmp_path, "alphabet", "--binary")
    assert body["payload"]["nonzero"] == 8
    code, body, _ = run(tmp_path, "entropy")
    assert body["payload"]["alphabet_entropy"] == pytest.approx(3.052, abs=5e-3)


def test_partition_csv_columns(tmp_path):
    code, _, out = run(tmp_path, "partition", "--format", "csv")
    lines = (out / "partition.csv").read_text().splitlines()
    assert code == 0 and lines[0] == "theta_lo,theta_hi,d_x,d_y,alpha,p" and len(lines) == 11


def test_reproduce_table1_reports_offending_cells(tmp_path, capsys):
    code, body, out = run(tmp_path, "reproduce-table1")
    bad = [d["quantity"] for d in body["payload"]["diff"] if not d["ok"]]
    assert (out / "table1_diff.csv").exists()
    if bad:
        assert code == 3
        err = capsys.readouterr().err
        assert all(q in err for q in bad)
    else:
        assert code == 0


def test_reproduce_non_redundant(tmp_path):
    code, body, _ = run(tmp_path, "reproduce-table1", "--non-redundant")
    assert code == 0 and body["payload"]["cells"]


def test_dropout_channel_out_of_range(tmp_path):
    code, _, _ = run(tmp_path, "dropout-relearn", "--channel", "5")
    assert code == 2


def test_learn_reference_point_and_weight_plot(tmp_path):
    code, body, out = run(tmp_path, "learn", "--learner", "hebb")
    assert code == 0 and body["payload"]["tie"] and body["payload"]["directions"] == [[1.0, -2.0]]
    code = cli.main(["plot", str(out / "learn.report.json"), "--kind", "weights", "--out", str(out)])
    assert code == 0 and (out / "weights.svg").read_text().count("<polyline") == 2


def test_plot_partition_and_empty_trajectory(tmp_path):
    _, _, out = run(tmp_path, "partition", "--format", "csv")
    assert cli.main(["plot", str(out / "partition.csv"), "--kind", "partition", "--out", str(out)]) == 0
    assert (out / "partition.svg").read_text().count("<polygon") == 10
    empty = tmp_path / "empty.csv"
    empty.write_text("t,x1\n")
    assert cli.main(["plot", str(empty), "--kind", "trajectory", "--out", str(out)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert cli.main(["plot", str(bad), "--kind", "partition", "--out", str(out)]) == 2


def test_payload_is_byte_reproducible(tmp_path):
    for args in (["partition"], ["learn", "--learner", "dqn"], ["verify", "--config", FIXTURE]):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert cli.main([*args, "--seed", "5", "--out", str(a)]) == 0
        assert cli.main([*args, "--seed", "5", "--out", str(b)]) == 0
        name = f"{args[0]}.report.json"
        assert cli.payload_digest(a / name) == cli.payload_digest(b / name)


def test_bad_seed_and_usage(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["design", "--seed", "-1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
