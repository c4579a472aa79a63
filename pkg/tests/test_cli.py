"""Command-line interface: subcommands, files, exit codes, determinism."""

import json
import os

import numpy as np
import pytest

from unsync3d import sceneio
from unsync3d.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def simulate_small(tmp_path, capsys, seed=3, extra=()):
    scene = tmp_path / "scene.json"
    truth = tmp_path / "truth.json"
    code, out, err = run(
        capsys,
        "simulate",
        "--seed",
        str(seed),
        "--points",
        "3",
        "--samples",
        "24",
        "--cameras",
        "3",
        "--scene-out",
        str(scene),
        "--truth-out",
        str(truth),
        *extra,
    )
    assert code == 0, err
    return scene, truth


def test_simulate_writes_scene_and_truth(tmp_path, capsys):
    scene, truth = simulate_small(tmp_path, capsys)
    assert scene.exists() and truth.exists()
    frames, obs = sceneio.load_scene(scene)
    assert len(frames) == 24
    assert obs.present.shape == (3, 24)
    X, order, hz, assignment = sceneio.load_truth(truth)
    assert X.shape == (9, 24)
    assert sorted(order.tolist()) == list(range(24))
    assert hz == 120.0
    assert assignment.shape == (24,)


def test_simulate_seed_env_override(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    c = tmp_path / "c.json"
    code, _, _ = run(
        capsys, "simulate", "--seed", "5", "--points", "2", "--samples", "12",
        "--scene-out", str(a),
    )
    assert code == 0
    os.environ["SEED"] = "5"
    try:
        code, _, _ = run(
            capsys, "simulate", "--points", "2", "--samples", "12",
            "--scene-out", str(b),
        )
        assert code == 0
        os.environ["SEED"] = "6"
        code, _, _ = run(
            capsys, "simulate", "--points", "2", "--samples", "12",
            "--scene-out", str(c),
        )
        assert code == 0
    finally:
        del os.environ["SEED"]
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main([]) == 2
    assert main(["simulate"]) == 2  # --seed and --scene-out required
    assert main(["solve"]) == 2
    assert main(["frobnicate"]) == 2


def test_missing_input_file_exits_3(tmp_path, capsys):
    code, out, err = run(
        capsys, "solve", "--scene", str(tmp_path / "nope.json"),
        "--out", str(tmp_path / "r.json"),
    )
    assert code == 3
    msg = json.loads(err.strip().split("\n")[-1])
    assert msg["category"] == "input"


def test_infeasible_scene_exits_4(tmp_path, capsys):
    scene = tmp_path / "one.json"
    code, _, _ = run(
        capsys, "simulate", "--seed", "4", "--points", "2", "--samples", "10",
        "--cameras", "1", "--no-consecutive-exclusion", "--scene-out", str(scene),
    )
    assert code == 0
    code, out, err = run(
        capsys, "solve", "--scene", str(scene), "--out", str(tmp_path / "r.json"),
    )
    assert code == 4
    msg = json.loads(err.strip().split("\n")[-1])
    assert msg["category"] == "infeasible"


def test_solve_and_eval_pipeline(tmp_path, capsys):
    scene, truth = simulate_small(tmp_path, capsys)
    result = tmp_path / "result.json"
    xyz = tmp_path / "points.xyz"
    code, out, err = run(
        capsys, "solve", "--scene", str(scene), "--out", str(result),
        "--xyz-out", str(xyz),
    )
    assert code == 0, err
    assert "objective" in out
    doc = sceneio.load_result(result)
    assert doc["structure"].shape == (9, 24)
    assert doc["weights"].shape == (24, 24)

    lines = xyz.read_text().strip().split("\n")
    assert lines[0].startswith("#")
    assert len(lines) == 1 + 3 * 24

    report = tmp_path / "report.json"
    code, out, err = run(
        capsys, "eval", "--result", str(result), "--truth", str(truth),
        "--out", str(report),
    )
    assert code == 0, err
    rep = sceneio.load_report(report)
    assert rep.accuracy_at[100] == 1.0  # noise-free small scene solves well
    assert rep.median_error < 1.0


def test_pipeline_byte_identical_across_runs(tmp_path, capsys):
    out = []
    for tag in ("x", "y"):
        scene = tmp_path / f"scene_{tag}.json"
        result = tmp_path / f"result_{tag}.json"
        code, _, _ = run(
            capsys, "simulate", "--seed", "7", "--points", "2", "--samples", "18",
            "--cameras", "3", "--scene-out", str(scene),
        )
        assert code == 0
        code, _, _ = run(
            capsys, "solve", "--scene", str(scene), "--out", str(result),
        )
        assert code == 0
        out.append((scene.read_bytes(), result.read_bytes()))
    assert out[0][0] == out[1][0]
    assert out[0][1] == out[1][1]


def test_analyze_with_truth_weights(tmp_path, capsys):
    scene, truth = simulate_small(tmp_path, capsys, seed=8)
    out_path = tmp_path / "analysis.json"
    code, out, err = run(
        capsys, "analyze", "--scene", str(scene), "--truth", str(truth),
        "--mask", "offdiag", "--out", str(out_path),
    )
    assert code == 0, err
    assert "max condition" in out
    doc = sceneio.load_analysis(out_path)
    assert len(doc["per_point"]) == 3
    assert "mask:offdiag" in doc["flags"]
    assert doc["max_condition"] >= doc["mean_condition"]


def test_analyze_without_truth_or_weights_fails(tmp_path, capsys):
    scene, _ = simulate_small(tmp_path, capsys, seed=9)
    code, out, err = run(
        capsys, "analyze", "--scene", str(scene), "--out", str(tmp_path / "a.json"),
    )
    assert code == 3


def test_baseline_filter_solve(tmp_path, capsys):
    scene, truth = simulate_small(tmp_path, capsys, seed=10)
    out_path = tmp_path / "base.json"
    code, out, err = run(
        capsys, "baseline", "--scene", str(scene), "--truth", str(truth),
        "--taps=-1,2,-1", "--out", str(out_path),
    )
    assert code == 0, err
    assert "filter cost" in out
    doc = sceneio.load_result(out_path)
    assert doc["structure"].shape == (9, 24)
    assert "baseline" in doc["flags"]

    # default taps are the first difference
    code, out, err = run(
        capsys, "baseline", "--scene", str(scene), "--truth", str(truth),
        "--out", str(tmp_path / "base2.json"),
    )
    assert code == 0, err
    assert "[1.0, -1.0]" in out


def test_report_merges_eval_outputs(tmp_path, capsys):
    scene, truth = simulate_small(tmp_path, capsys, seed=11)
    result = tmp_path / "r.json"
    rep = tmp_path / "rep.json"
    assert run(capsys, "solve", "--scene", str(scene), "--out", str(result))[0] == 0
    assert run(
        capsys, "eval", "--result", str(result), "--truth", str(truth),
        "--out", str(rep),
    )[0] == 0
    table = tmp_path / "table.csv"
    code, out, err = run(
        capsys, "report", "--axis", "noise", "--out", str(table),
        f"0.0={rep}", f"1.0={rep}",
    )
    assert code == 0, err
    lines = table.read_text().strip().split("\n")
    assert lines[0] == "noise,10,20,30,40,50,100"
    assert len(lines) == 4  # two rows plus pooled
    code, out, err = run(
        capsys, "report", "--axis", "noise", "--out", str(table), "oops",
    )
    assert code == 3


def test_solve_rejects_bad_lambda3(tmp_path, capsys):
    scene, _ = simulate_small(tmp_path, capsys, seed=12)
    code, out, err = run(
        capsys, "solve", "--scene", str(scene), "--out", str(tmp_path / "r.json"),
        "--lambda3", "soft",
    )
    assert code == 3
