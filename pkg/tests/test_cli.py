"""CLI subcommands via click's test runner."""

import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from dynann.cli import main
from dynann.datasets import load_dataset, load_ground_truth, save_dataset


@pytest.fixture
def runner():
    return CliRunner()


def test_gen_synth(tmp_path, runner):
    out = tmp_path / "data.fvecs"
    res = runner.invoke(main, [
        "gen-synth", "--n", "100", "--clusters", "4", "--cluster-size", "25",
        "--dim", "6", "--seed", "1", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    data = load_dataset(str(out))
    assert data.shape == (100, 6)


def test_gen_truth(tmp_path, runner, rng):
    data = rng.normal(size=(40, 4)).astype(np.float32)
    queries = data[:5]
    dpath, qpath = tmp_path / "d.fvecs", tmp_path / "q.fvecs"
    save_dataset(str(dpath), data)
    save_dataset(str(qpath), queries)
    out = tmp_path / "truth.bin"
    res = runner.invoke(main, [
        "gen-truth", "--data", str(dpath), "--queries", str(qpath),
        "--k", "3", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    truth = load_ground_truth(str(out))
    assert truth.shape == (5, 3)
    assert list(truth[:, 0]) == [0, 1, 2, 3, 4]  # each query's NN is itself


def test_run_and_plot_end_to_end(tmp_path, runner, rng):
    data = (rng.normal(size=(150, 4)) * 0.05
            + rng.integers(0, 3, size=(150, 1))).astype(np.float32)
    queries = data[rng.choice(150, 6)]
    dpath, qpath = tmp_path / "d.fvecs", tmp_path / "q.fvecs"
    save_dataset(str(dpath), data)
    save_dataset(str(qpath), queries)
    metrics = tmp_path / "metrics.csv"
    res = runner.invoke(main, [
        "run", "--engine", "cleann", "--protocol", "batched-update",
        "--data", str(dpath), "--queries", str(qpath),
        "--window", "80", "--rounds", "2", "--k", "3", "--threads", "2",
        "--seed", "7", "--out", str(metrics),
        "--degree", "8", "--beam", "16", "--insert-beam", "16",
        "--batch-fraction", "0.05",
    ])
    assert res.exit_code == 0, res.output

    # One JSON object per round on stdout.
    json_lines = [l for l in res.output.splitlines() if l.startswith("{")]
    assert len(json_lines) == 2
    for line in json_lines:
        obj = json.loads(line)
        assert obj["schema_version"] == 1
        assert 0.0 <= obj["recall_at_k"] <= 1.0

    with open(metrics, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["round"] for r in rows] == ["1", "2"]

    plot = tmp_path / "plot.csv"
    res = runner.invoke(main, ["plot", "--metrics", str(metrics), "--out", str(plot)])
    assert res.exit_code == 0, res.output
    with open(plot, newline="") as f:
        plot_rows = list(csv.DictReader(f))
    assert len(plot_rows) == 2
    assert set(plot_rows[0]) == {
        "round", "recall_at_k", "insert_qps", "delete_qps", "search_qps"
    }


def test_run_with_explicit_bridge_depths(tmp_path, runner, rng):
    data = rng.normal(size=(60, 3)).astype(np.float32)
    dpath, qpath = tmp_path / "d.fvecs", tmp_path / "q.fvecs"
    save_dataset(str(dpath), data)
    save_dataset(str(qpath), data[:4])
    res = runner.invoke(main, [
        "run", "--data", str(dpath), "--queries", str(qpath),
        "--window", "40", "--rounds", "1", "--k", "2",
        "--out", str(tmp_path / "m.csv"),
        "--degree", "6", "--beam", "8", "--insert-beam", "8",
        "--bridge-depths", "2,3", "--bridge-predicate", "all",
        "--batch-fraction", "0.1",
    ])
    assert res.exit_code == 0, res.output


def test_run_rejects_unknown_engine(runner):
    res = runner.invoke(main, ["run", "--engine", "warp"])
    assert res.exit_code != 0
