"""Workload benchmark CLI.

Subcommands:

* ``bench run``: run a sliding-window protocol against a dataset, streaming
  one JSON object per round and writing a final CSV.
* ``bench gen-synth``: generate the clustered synthetic dataset.
* ``bench gen-truth``: write exact ground-truth files for a query set.
* ``bench plot``: reshape a metrics CSV into per-round recall/throughput
  plot data (CSV; display is out of scope).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .bridge import BridgeConfig, PREDICATE_ALL, PREDICATE_SAME_DEPTH
from .datasets import (
    generate_clustered,
    load_dataset,
    save_dataset,
    save_ground_truth,
)
from .graph import IndexParams
from .index import EngineMode
from .metrics import Metric
from .oracle import exact_knn
from .workload import RoundMetrics, WorkloadConfig, run_sliding_window


@click.group()
def main() -> None:
    """Dynamic graph ANN index workload harness."""


@main.command("run")
@click.option("--engine", type=click.Choice(["cleann", "naive", "fresh", "rebuild"]), default="cleann")
@click.option("--protocol", type=click.Choice(["batched-update", "batched-insert", "mixed-update"]), default="batched-update")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True))
@click.option("--window", type=int, required=True)
@click.option("--rounds", type=int, required=True)
@click.option("--k", type=int, default=10)
@click.option("--threads", type=int, default=4, help="Worker threads (BENCH_THREADS overrides).")
@click.option("--seed", type=int, default=42)
@click.option("--out", "out_path", type=click.Path(), default="metrics.csv")
@click.option("--metric", type=click.Choice(["l2", "ip", "cosine"]), default="l2")
@click.option("--batch-fraction", type=float, default=0.01)
@click.option("--train-fraction", type=float, default=0.02)
@click.option("--train-count", type=int, default=None)
@click.option("--train/--no-train", "train_enabled", default=True)
@click.option("--ood-train", is_flag=True, default=False)
@click.option("--degree", "-R", type=int, default=64)
@click.option("--beam", "-L", type=int, default=75)
@click.option("--insert-beam", type=int, default=64)
@click.option("--alpha", type=float, default=1.2)
@click.option("--eagerness", "-C", type=int, default=7)
@click.option("--bridge", type=click.Choice(["on", "off"]), default="on")
@click.option("--bridge-depths", default="auto", help="'auto' or comma-separated depths a,b,c.")
@click.option("--bridge-predicate", type=click.Choice(["same-depth", "all"]), default="same-depth")
@click.option("--bridge-cap", type=int, default=256)
@click.option("--truth-cache", type=click.Path(), default=None)
def run_cmd(
    engine, protocol, data_path, queries_path, window, rounds, k, threads, seed,
    out_path, metric, batch_fraction, train_fraction, train_count, train_enabled,
    ood_train, degree, beam, insert_beam, alpha, eagerness, bridge, bridge_depths,
    bridge_predicate, bridge_cap, truth_cache,
):
    """Run a sliding-window experiment."""
    data = load_dataset(data_path)
    queries = load_dataset(queries_path)
    cfg = WorkloadConfig(
        engine=EngineMode.parse(engine),
        window_size=window,
        rounds=rounds,
        protocol=protocol,
        batch_fraction=batch_fraction,
        train_fraction=train_fraction,
        train_count=train_count,
        train_enabled=train_enabled,
        ood_training=ood_train,
        k=k,
        threads=threads,
        seed=seed,
    )
    params = IndexParams(
        dim=data.shape[1], R=degree, L=beam, L_I=insert_beam, alpha=alpha,
        C=eagerness, metric=Metric.parse(metric), capacity=1,
    )
    depths = None
    if bridge_depths != "auto":
        depths = frozenset(int(s) for s in bridge_depths.split(","))
    bridge_cfg = BridgeConfig(
        S=depths,
        predicate=PREDICATE_SAME_DEPTH if bridge_predicate == "same-depth" else PREDICATE_ALL,
        max_pairs_per_query=bridge_cap,
        enabled=(bridge == "on"),
    )

    def sink(rm: RoundMetrics) -> None:
        click.echo(json.dumps(rm.to_dict()))

    results = run_sliding_window(
        cfg, data, queries, params=params, bridge=bridge_cfg,
        metrics_sink=sink, truth_cache_dir=truth_cache,
    )
    _write_metrics_csv(out_path, results)
    click.echo(f"wrote {len(results)} rounds to {out_path}", err=True)


def _write_metrics_csv(path: str, results: list[RoundMetrics]) -> None:
    fields = [
        "schema_version", "round", "recall_at_k", "insert_qps", "delete_qps",
        "search_qps", "live_nodes", "tombstones", "replaceable", "peak_slots",
    ]
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for rm in results:
            writer.writerow(rm.to_dict())


@main.command("gen-synth")
@click.option("--kind", type=click.Choice(["clusters"]), default="clusters")
@click.option("--n", type=int, required=True)
@click.option("--clusters", type=int, default=10_000)
@click.option("--cluster-size", type=int, default=100)
@click.option("--dim", type=int, default=128)
@click.option("--spread", type=float, default=0.02)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), required=True)
def gen_synth_cmd(kind, n, clusters, cluster_size, dim, spread, seed, out_path):
    """Generate Gaussian-cluster synthetic data (fvecs/bvecs/fbin by extension)."""
    data = generate_clustered(n, clusters, cluster_size, dim, seed=seed, spread=spread)
    save_dataset(out_path, data)
    click.echo(f"wrote {data.shape[0]} x {data.shape[1]} vectors to {out_path}", err=True)


@main.command("gen-truth")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=10)
@click.option("--metric", type=click.Choice(["l2", "ip", "cosine"]), default="l2")
@click.option("--out", "out_path", type=click.Path(), required=True)
def gen_truth_cmd(data_path, queries_path, k, metric, out_path):
    """Write exact kNN ground truth for every query."""
    data = load_dataset(data_path)
    queries = load_dataset(queries_path)
    m = Metric.parse(metric)
    truth = np.asarray([exact_knn(q, k, data, m) for q in queries], dtype=np.int32)
    save_ground_truth(out_path, truth)
    click.echo(f"wrote truth for {truth.shape[0]} queries to {out_path}", err=True)


@main.command("plot")
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), required=True)
def plot_cmd(metrics_path, out_path):
    """Emit per-round recall/throughput plot data as CSV."""
    with open(metrics_path, newline="") as f:
        rows = list(csv.DictReader(f))
    with open(out_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["round", "recall_at_k", "insert_qps", "delete_qps", "search_qps"])
        for row in rows:
            writer.writerow(
                [row["round"], row["recall_at_k"], row["insert_qps"],
                 row["delete_qps"], row["search_qps"]]
            )
    click.echo(f"wrote plot data for {len(rows)} rounds to {out_path}", err=True)


if __name__ == "__main__":
    main()
