"""Command-line behavior: exit codes, stream separation, determinism."""

import json

import numpy as np
import pytest

from extvec.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


FREE_BODY = {
    "particles": [
        {"m": 1.0, "x": [0.0, 0.0, 0.0], "v": [0.3, 0.0, 0.0]},
        {"m": 2.0, "x": [1.0, 0.0, 0.0], "v": [0.0, 0.4, 0.0]},
        {"m": 0.5, "x": [0.0, 1.0, 0.0], "v": [0.0, 0.0, -0.2]},
    ],
    "force": {"name": "none"},
}

SPRING_PAIR = {
    "particles": [
        {"m": 1.0, "x": [1.0, 0.0, 0.0], "v": [0.0, 0.5, 0.0]},
        {"m": 1.0, "x": [-1.0, 0.0, 0.0], "v": [0.0, -0.5, 0.0]},
    ],
    "force": {"name": "pairwise_spring", "k": 1.0},
}


def test_simulate_free_body_passes(tmp_path, capsys):
    cfg = write_json(tmp_path / "body.json", FREE_BODY)
    out_csv = tmp_path / "traj.csv"
    code, out, err = run_cli(
        capsys, "simulate", "--config", cfg, "--steps", "500", "--out", str(out_csv)
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["passed"] is True
    assert summary["particles"] == 3
    assert summary["momentum_drift"] <= 1e-12
    assert summary["energy_drift"] <= 1e-12
    assert summary["balance_max_residual"] <= 1e-12
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == 502  # header + initial state + 500 steps
    assert lines[0].startswith("t,x0_1")


def test_simulate_spring_large_dt_fails_tolerance(tmp_path, capsys):
    cfg = write_json(tmp_path / "body.json", SPRING_PAIR)
    code, out, err = run_cli(
        capsys,
        "simulate", "--config", cfg,
        "--dt", "1.0", "--steps", "50",
        "--out", str(tmp_path / "t.csv"),
    )
    assert code == 3
    summary = json.loads(out)
    assert summary["passed"] is False
    assert summary["balance_max_residual"] > summary["tolerance"]
    assert "tolerance failure" in err


def test_simulate_spring_small_dt_passes(tmp_path, capsys):
    cfg = write_json(tmp_path / "body.json", SPRING_PAIR)
    code, out, _ = run_cli(
        capsys,
        "simulate", "--config", cfg,
        "--dt", "1e-3", "--steps", "200",
        "--tolerance", "1e-6",
        "--out", str(tmp_path / "t.csv"),
    )
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, err = run_cli(
        capsys, "simulate", "--config", str(bad), "--out", str(tmp_path / "t.csv")
    )
    assert code == 2
    assert out == ""  # data stream stays clean
    assert "error:" in err


def test_schema_violation_exits_2(tmp_path, capsys):
    cfg = write_json(tmp_path / "body.json", {"particles": []})
    code, out, err = run_cli(capsys, "simulate", "--config", cfg)
    assert code == 2
    assert out == ""
    assert "particles" in err


def test_nonpositive_dt_exits_2(tmp_path, capsys):
    cfg = write_json(tmp_path / "body.json", FREE_BODY)
    code, out, err = run_cli(capsys, "simulate", "--config", cfg, "--dt", "-0.5")
    assert code == 2
    assert "dt" in err


def test_config_flag_precedence(tmp_path, capsys):
    doc = dict(FREE_BODY)
    doc["dt"] = 0.1
    doc["steps"] = 10
    cfg = write_json(tmp_path / "body.json", doc)
    code, out, _ = run_cli(
        capsys,
        "simulate", "--config", cfg, "--dt", "0.05",
        "--out", str(tmp_path / "t.csv"),
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["dt"] == 0.05  # flag wins
    assert summary["steps"] == 10  # config value kept


def test_toml_config(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "\n".join(
            [
                "dt = 1e-3",
                "steps = 20",
                "[[particles]]",
                "m = 1.0",
                "x = [0.0, 0.0, 0.0]",
                "v = [0.1, 0.0, 0.0]",
                "[[particles]]",
                "m = 1.0",
                "x = [1.0, 0.0, 0.0]",
                "v = [0.0, 0.0, 0.0]",
                "[force]",
                'name = "none"',
            ]
        )
    )
    code, out, _ = run_cli(
        capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "t.csv")
    )
    assert code == 0
    assert json.loads(out)["steps"] == 20


def test_verify_reports_are_deterministic(tmp_path, capsys):
    cfg = write_json(tmp_path / "v.json", {"cases": 3})
    code1, out1, _ = run_cli(capsys, "verify", "--config", cfg, "--seed", "7")
    code2, out2, _ = run_cli(capsys, "verify", "--config", cfg, "--seed", "7")
    code3, out3, _ = run_cli(capsys, "verify", "--config", cfg, "--seed", "8")
    assert code1 == code2 == code3 == 0
    assert out1 == out2  # byte-identical for a fixed seed
    assert out1 != out3


def test_verify_overtight_tolerance_exits_3(tmp_path, capsys):
    cfg = write_json(tmp_path / "v.json", {"cases": 3})
    code, out, err = run_cli(
        capsys, "verify", "--config", cfg, "--tolerance", "1e-16"
    )
    assert code == 3
    report = json.loads(out)
    assert report["passed"] is False
    failed = [p for p in report["properties"] if not p["passed"]]
    assert failed and all(p["max_residual"] > 1e-16 for p in failed)
    assert "property failures" in err


def test_verify_out_file_matches_stdout(tmp_path, capsys):
    cfg = write_json(tmp_path / "v.json", {"cases": 2})
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys, "verify", "--config", cfg, "--seed", "1", "--out", str(out_path)
    )
    assert code == 0
    assert out_path.read_text() == out


def test_derive_coordinate_function(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "d.json",
        {
            "field": {
                "kind": "scalar",
                "metric": {"name": "euclidean3"},
                "origin": [0.0, 0.0, 0.0],
                "terms": [{"exps": [1, 0, 0], "coef": 1.0}],
            },
            "check": {"slots": [0, 1], "h": 1e-4},
        },
    )
    code, out, _ = run_cli(capsys, "derive", "--config", cfg)
    assert code == 0
    doc = json.loads(out)
    pairs = doc["form"]["pairs"]
    # translation slot along the first axis: the constant 1
    assert pairs["0,3"] == [{"exps": [0, 0, 0], "coef": 1.0}]
    # rotation slot (0,1): x_1 d_0 - x_0 d_1 applied to x^0 gives x^1
    assert pairs["0,1"] == [{"exps": [0, 1, 0], "coef": 1.0}]
    assert pairs["1,2"] == []
    assert doc["check"]["residual"] <= 1e-7


def test_derive_with_argument_contracts(tmp_path, capsys):
    arg = np.zeros((4, 4))
    arg[0, 3], arg[3, 0] = 2.0, -2.0
    cfg = write_json(
        tmp_path / "d.json",
        {
            "field": {
                "kind": "scalar",
                "metric": {"name": "euclidean3"},
                "terms": [{"exps": [2, 0, 0], "coef": 1.0}],
            },
            "argument": {"comps": arg.tolist()},
        },
    )
    code, out, _ = run_cli(capsys, "derive", "--config", cfg)
    assert code == 0
    doc = json.loads(out)
    # 2 * d/dx0 of x0^2 is 4 x0
    assert doc["derivative"]["terms"] == [{"exps": [1, 0, 0], "coef": 4.0}]


def test_derive_missing_field_exits_2(tmp_path, capsys):
    cfg = write_json(tmp_path / "d.json", {"check": {"slots": [0, 1]}})
    code, out, err = run_cli(capsys, "derive", "--config", cfg)
    assert code == 2
    assert out == ""


def test_transform_identity_echoes_field(tmp_path, capsys):
    field = {
        "kind": "vector",
        "metric": {"name": "euclidean3"},
        "origin": [0.0, 0.0, 0.0],
        "components": [
            [{"exps": [0, 1, 0], "coef": 1.0}],
            [],
            [{"exps": [0, 0, 0], "coef": 2.0}],
        ],
    }
    cfg = write_json(
        tmp_path / "t.json",
        {
            "motion": {"L": np.eye(3).tolist(), "a": [0.0, 0.0, 0.0]},
            "field": field,
        },
    )
    code, out, _ = run_cli(capsys, "transform", "--config", cfg)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["components"] == field["components"]
    assert result["origin"] == field["origin"]


def test_transform_rotates_constant_field(tmp_path, capsys):
    # quarter turn about z; the component mix is by the inverse rotation
    L = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    cfg = write_json(
        tmp_path / "t.json",
        {
            "motion": {"L": L, "a": [0.0, 0.0, 0.0]},
            "field": {
                "kind": "vector",
                "metric": {"name": "euclidean3"},
                "components": [[{"exps": [0, 0, 0], "coef": 1.0}], [], []],
            },
        },
    )
    code, out, _ = run_cli(capsys, "transform", "--config", cfg)
    assert code == 0
    comps = json.loads(out)["result"]["components"]
    assert comps[0] == []
    assert comps[1] == [{"exps": [0, 0, 0], "coef": -1.0}]
    assert comps[2] == []


def test_transform_tensor_roundtrip(tmp_path, capsys):
    from extvec.core import ExtTensor, euclidean3, p_frame

    v = ExtTensor(p_frame(euclidean3(), np.zeros(3)), 1, 0, [1.0, 2.0, 3.0, 1.0])
    cfg = write_json(
        tmp_path / "t.json",
        {
            "motion": {"L": np.eye(3).tolist(), "a": [0.5, 0.0, 0.0]},
            "tensor": v.to_dict(),
        },
    )
    code, out, _ = run_cli(capsys, "transform", "--config", cfg)
    assert code == 0
    comps = json.loads(out)["result"]["comps"]
    # translation part feeds the lowered base components into slot 5
    assert comps[:3] == [1.0, 2.0, 3.0]
    assert comps[3] == pytest.approx(1.0 + 0.5 * 1.0)


def test_transform_without_target_exits_2(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "t.json",
        {"motion": {"L": np.eye(3).tolist(), "a": [0.0, 0.0, 0.0]}},
    )
    code, out, err = run_cli(capsys, "transform", "--config", cfg)
    assert code == 2
    assert "field" in err or "tensor" in err


def test_bad_motion_matrix_exits_2(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "t.json",
        {
            "motion": {"L": [[2.0, 0, 0], [0, 1, 0], [0, 0, 1]], "a": [0, 0, 0]},
            "field": {
                "kind": "scalar",
                "metric": {"name": "euclidean3"},
                "terms": [],
            },
        },
    )
    code, out, err = run_cli(capsys, "transform", "--config", cfg)
    assert code == 2
    assert out == ""
