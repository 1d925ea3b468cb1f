import json

import pytest

from cfinsler.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_exit_codes(capsys, tmp_path):
    assert run(capsys, "check", "ball_kobayashi", "--samples", "5")[0] == 0
    code, out, _ = run(capsys, "check", "--expr", "v1+z1", "--dim", "1", "--samples", "5")
    assert code == 1 and "homogeneity" in json.loads(out)["failed"]
    assert run(capsys, "check", str(tmp_path / "missing.metric"))[0] == 64


def test_curvature_csv(capsys):
    code, out, _ = run(capsys, "curvature", "poincare_disk", "--samples", "10", "--format", "csv")
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0].split(",")[-1] == "K_F"
    assert all(abs(float(l.split(",")[-1]) + 4) < 1e-9 for l in lines[1:])


def test_curvature_euclidean_and_quartic(capsys):
    code, out, _ = run(capsys, "curvature", "euclidean", "--samples", "10")
    assert code == 0
    assert {row["K_F"] for row in json.loads(out)["rows"]} == {0.0}
    code, out, _ = run(capsys, "curvature", "quartic_ball_perturbation", "--samples", "10")
    summary = json.loads(out)["summary"]
    assert summary["max"] - summary["min"] > 0


def test_classify_exit_codes(capsys):
    code, out, _ = run(capsys, "classify", "ball_kobayashi", "--samples", "20")
    assert code == 0 and json.loads(out)["geodesic_condition"]["verdict"] == "PASS"
    assert run(capsys, "classify", "euclidean", "--samples", "20")[0] == 0
    assert run(capsys, "classify", "--expr", "abs2(v1)", "--dim", "2", "--samples", "20")[0] == 2


def test_geodesic_outputs(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    summary = tmp_path / "summary.json"
    code, _, _ = run(capsys, "geodesic", "ball_kobayashi", "--p", "0,0", "--xi", "1,0",
                     "--trace-csv", str(trace), "-o", str(summary), "--quiet")
    assert code == 0 and trace.exists() and summary.exists()
    assert "GEODESIC-COMPLEX-CURVE" in json.loads(summary.read_text())["flags"]
    assert run(capsys, "geodesic", "euclidean", "--p", "0,0", "--xi", "1,0")[0] == 3
    assert run(capsys, "geodesic", "ball_kobayashi", "--p", "0,0", "--xi", "0,0")[0] == 64


def test_ahlfors_and_laplacian(capsys):
    code, out, _ = run(capsys, "ahlfors")
    assert code == 0 and "HEINS-EQUALITY" in json.loads(out)["flags"]
    code, out, _ = run(capsys, "ahlfors", "--factor", "0.5")
    assert code == 0 and json.loads(out)["flags"] == []
    assert run(capsys, "ahlfors", "--factor", "2")[0] == 1
    code, out, _ = run(capsys, "ahlfors", "ball_kobayashi", "--direction", "1,0")
    assert "HEINS-EQUALITY" in json.loads(out)["flags"]
    code, out, _ = run(capsys, "laplacian", "--source-a", "0.25", "--at", "0.3")
    assert json.loads(out)["rows"][0]["K"] == pytest.approx(-1, abs=1e-4)


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nsamples = 7\n")
    code, out, _ = run(capsys, "--config", str(cfg), "curvature", "euclidean")
    assert code == 0 and len(json.loads(out)["rows"]) == 7
    code, out, _ = run(capsys, "--config", str(cfg), "curvature", "euclidean", "--samples", "3")
    assert len(json.loads(out)["rows"]) == 3


def test_output_is_identical_across_thread_counts(capsys):
    outputs = {run(capsys, "classify", "quartic_ball_perturbation", "--samples", "30",
                   "--threads", t)[1] for t in ("1", "3")}
    assert len(outputs) == 1


@pytest.mark.parametrize("command", ["check", "curvature", "classify", "geodesic",
                                     "laplacian", "ahlfors"])
def test_every_command_has_format_and_quiet(capsys, command):
    code, out, _ = run(capsys, command, "--help")
    assert code == 0 and "--format" in out and "--quiet" in out
