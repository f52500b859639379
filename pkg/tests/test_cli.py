import csv
import io
import json

import numpy as np
import pytest

from robinmetric.cli import config_hash, expand_columns, fmt, load_schema, main


@pytest.fixture
def ball_toml(tmp_path):
    path = tmp_path / "ball.toml"
    path.write_text('[domain]\nkind = "ball"\nn = 2\n[domain.params]\nradius = 1.0\n')
    return str(path)


@pytest.fixture
def halfspace_json(tmp_path):
    path = tmp_path / "hs.json"
    path.write_text(json.dumps({"kind": "halfspace", "n": 2, "params": {"b": [[0, 0], [1, 0]]}}))
    return str(path)


def _csv(text):
    lines = text.splitlines()
    return lines[0], list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_robin_json(ball_toml, capsys):
    assert main(["robin", "--domain", ball_toml, "--point", "0,0", "--order", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema_version"] == load_schema()["schema_version"]
    assert doc["command"] == "robin"
    assert doc["config_hash"] == config_hash(doc["config"])
    assert doc["robin"]["lambda_big"] == pytest.approx(-1.0)


def test_metric_positive_and_degenerate(ball_toml, halfspace_json, capsys):
    assert main(["metric", "--domain", ball_toml, "--point", "0,0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert np.allclose(np.array(doc["metric"]["g"])[..., 0], 2 * np.eye(2))
    with pytest.warns(RuntimeWarning, match="positive definite"):
        rc = main(["metric", "--domain", halfspace_json, "--point", "0,0.1", "--backend", "halfspace"])
    assert rc == 1


def test_domain_check(ball_toml, halfspace_json, capsys):
    assert main(["domain-check", "--domain", ball_toml, "--samples", "32"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["bounded"] is True and doc["pseudoconvexity"]["passed"] is True
    main(["domain-check", "--domain", halfspace_json])
    assert json.loads(capsys.readouterr().out)["bounded"] is False


def test_config_errors_exit_2(tmp_path, ball_toml):
    bad = tmp_path / "bad.toml"
    bad.write_text("[domain\nkind = ")
    assert main(["robin", "--domain", str(bad), "--point", "0,0"]) == 2
    assert main(["robin", "--domain", ball_toml, "--n", "3", "--point", "0,0,0"]) == 2
    assert main(["robin", "--domain", str(tmp_path / "missing.toml"), "--point", "0,0"]) == 2
    assert main(["robin", "--domain", ball_toml, "--point", "zero"]) == 2
    assert main(["robin", "--domain", ball_toml]) == 2
    assert main(["no-such-command"]) == 2
    unknown = tmp_path / "unknown.toml"
    unknown.write_text('kind = "torus"\nn = 2\n')
    assert main(["robin", "--domain", str(unknown), "--point", "0,0"]) == 2


def test_numerical_failure_exit_1(ball_toml):
    assert main(["robin", "--domain", ball_toml, "--point", "2,0"]) == 1


def test_top_level_keys_and_run_table(tmp_path, capsys):
    path = tmp_path / "d.toml"
    path.write_text('kind = "ellipsoid"\nparams = {weights = [2.0, 1.0]}\n[run]\nseed = 5\n')
    assert main(["domain-check", "--domain", str(path), "--samples", "16"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["seed"] == 5


def test_geodesic_csv(ball_toml, capsys):
    rc = main(["geodesic", "--domain", ball_toml, "--point", "0.1,0.2j", "--velocity", "0.2,0.1",
               "--T", "0.5", "--samples", "11", "--epsilon1", "0.05"])
    assert rc == 0
    cap = capsys.readouterr()
    pre, rows = _csv(cap.out)
    assert pre.startswith("# schema_version=1 config_hash=")
    assert rows[0] == expand_columns("geodesic", 2)
    assert rows[0][:5] == ["t", "re_p1", "re_p2", "im_p1", "im_p2"]
    assert len(rows) == 12
    assert float(rows[1][0]) == 0.0 and float(rows[1][1]) == 0.1
    side = json.loads(cap.err)
    assert side["energy_drift"] <= 1e-8 and side["escape"]["passed"] is True


def test_output_directory_and_determinism(ball_toml, tmp_path):
    args = ["band-scan", "--domain", ball_toml, "--eps", "0.05,0.1", "--directions", "2",
            "--boundary-samples", "3", "--seed", "4", "--p0", "0,0"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    for name in ("band-scan.csv", "band-scan.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    pre, rows = _csv((a / "band-scan.csv").read_text())
    assert rows[0] == expand_columns("band-scan", 2)
    assert len(rows) == 1 + 3 * 2 * 2
    summary = json.loads((a / "band-scan.json").read_text())["summary"]
    assert summary["certified_epsilon"] == 0.1 and summary["epsilon1"] == pytest.approx(0.05)
    other = tmp_path / "c"
    main(args[:-4] + ["--seed", "5", "--p0", "0,0", "--out", str(other)])
    assert (other / "band-scan.csv").read_bytes() != (a / "band-scan.csv").read_bytes()


def test_asymptotics_csv(tmp_path, capsys):
    path = tmp_path / "nb.toml"
    path.write_text('kind = "affine"\n[params]\nbase = {kind = "ball", n = 2, params = {radius = 1.0}}\n'
                    'shift = [[0.0, 0.0], [1.0, 0.0]]\nmatrix = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]\n'
                    'scale = 1.0\n')
    rc = main(["asymptotics", "--domain", str(path), "--kind", "G_SCALE", "--indices", "2,2",
               "--deltas", "0.1,0.01,0.001"])
    cap = capsys.readouterr()
    assert rc == 0, cap.err
    pre, rows = _csv(cap.out)
    assert rows[0] == load_schema()["csv"]["asymptotics"]
    assert [float(r[0]) for r in rows[1:]] == [0.1, 0.01, 0.001]
    assert json.loads(cap.err)["verdict"]["passed"] is True


def test_asymptotics_bad_indices_exit_2(ball_toml):
    rc = main(["asymptotics", "--domain", ball_toml, "--kind", "FINE_G", "--indices", "2,1",
               "--point", "0,1"])
    assert rc == 2


@pytest.mark.parametrize("x", [0.1, 1 / 3, -2.5e-300, 12345.678901234567, np.pi])
def test_float_format_round_trips(x):
    assert float(fmt(x)) == x


def test_halfspace_verify(capsys):
    rc = main(["halfspace-verify", "--n", "2", "--samples", "2e4", "--seed", "1", "--z-max", "5"])
    cap = capsys.readouterr()
    pre, rows = _csv(cap.out)
    assert rows[0] == load_schema()["csv"]["halfspace-verify"]
    assert rc == (0 if json.loads(cap.err)["passed"] else 1)
    assert main(["halfspace-verify", "--n", "2", "--samples", "0.5"]) == 2


def test_full_report_subset(ball_toml, capsys):
    assert main(["full-report", "--domain", ball_toml, "--criteria", "5"]) == 0
    cap = capsys.readouterr()
    doc = json.loads(cap.out)
    assert doc["passed"] is True and [c["number"] for c in doc["criteria"]] == [5]
    assert "PASS" in cap.err
