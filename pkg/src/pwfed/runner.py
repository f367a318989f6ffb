"""Glue between an ExperimentSpec, the federation loop and the output files."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .config import ExperimentSpec, spec_to_dict
from .federation import Aggregator, ClientUpdate, ExperimentResult, run_experiment
from .metrics import (
    ReliabilityReport,
    accuracy_moments,
    reliability_index,
    rounds_to_target,
    variance_analysis,
)
from .report import write_json, write_rounds_csv, write_table, write_variance_tables

log = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    spec: ExperimentSpec
    result: ExperimentResult
    summary: dict
    updates: list[list[ClientUpdate]] | None = None


def summarize(spec: ExperimentSpec, result: ExperimentResult, seconds: float) -> dict:
    accs = [r.test_accuracy for r in result.records]
    try:
        xi = reliability_index(accs, spec.burn_in)
    except (ValueError, ZeroDivisionError):
        xi = None
    mean, std = accuracy_moments(result.records, spec.burn_in)
    return {
        "aggregator": spec.federation.aggregator.value,
        "batch_size": spec.federation.batch_size,
        "rounds": len(result.records),
        "final_accuracy": accs[-1] if accs else None,
        "max_accuracy": max(accs) if accs else None,
        "mean_accuracy": mean if accs else None,
        "std_accuracy": std if accs else None,
        "reliability_index": xi,
        "rounds_to_target": {f"{t:g}": rounds_to_target(result.records, t) for t in spec.targets},
        "wall_clock_seconds": seconds,
    }


def execute(spec: ExperimentSpec, *, keep_updates: bool = False, workers: int | None = None) -> RunOutcome:
    train, test = spec.load_data()
    partition = spec.make_partition(train)
    history: list[list[ClientUpdate]] = []

    def hook(r, params, updates):
        history.append(updates)

    start = time.perf_counter()
    result = run_experiment(
        spec.federation, train, test, spec.arch, spec.adam, partition,
        on_round=hook if keep_updates else None, max_workers=workers,
    )
    seconds = time.perf_counter() - start
    summary = summarize(spec, result, seconds)
    summary["client_sizes"] = partition.sizes()
    return RunOutcome(spec, result, summary, history if keep_updates else None)


def run_and_write(spec: ExperimentSpec, out_dir: Path | None = None, workers: int | None = None) -> RunOutcome:
    out_dir = Path(out_dir or spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome = execute(spec, keep_updates=spec.record_variance_analysis, workers=workers)
    write_rounds_csv(out_dir / "rounds.csv", outcome.result.records, spec.record_variance_analysis)
    write_json(out_dir / "summary.json", {**outcome.summary, "config": spec_to_dict(spec)})
    if outcome.updates:
        write_variance_tables(out_dir, variance_analysis(outcome.updates, spec.federation.aggregation_epsilon))
    log.info("wrote %s", out_dir)
    return outcome


def compare(spec: ExperimentSpec, batch_sizes=None, out_dir: Path | None = None, workers: int | None = None) -> dict:
    """Both aggregators over a list of batch sizes; accuracy and reliability matrices."""
    out_dir = Path(out_dir or spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch_sizes = list(batch_sizes or spec.compare_batch_sizes)
    aggs = [Aggregator.FEDAVG, Aggregator.PRECISION_WEIGHTED]
    cells: dict[tuple[int, Aggregator], dict] = {}
    for b in batch_sizes:
        for agg in aggs:
            sub = spec.with_overrides(aggregator=agg.value, batch_size=b)
            outcome = run_and_write(sub, out_dir / f"{agg.value}_B{b}", workers)
            cells[(b, agg)] = outcome.summary

    acc_header = ["batch_size"] + [f"{a.label}_{s}" for a in aggs for s in ("mean", "std")]
    acc_rows = [[b] + [cells[(b, a)][k] for a in aggs for k in ("mean_accuracy", "std_accuracy")]
                for b in batch_sizes]
    write_table(out_dir / "accuracy_matrix.csv", acc_header, acc_rows)

    reports = {
        a: ReliabilityReport.from_indices(
            [(f"B={b}", cells[(b, a)]["reliability_index"]) for b in batch_sizes]
        )
        if all(cells[(b, a)]["reliability_index"] is not None for b in batch_sizes) else None
        for a in aggs
    }
    rel_rows = [[b] + [cells[(b, a)]["reliability_index"] for a in aggs] for b in batch_sizes]
    rel_rows.append(["overall"] + [reports[a].overall if reports[a] else None for a in aggs])
    write_table(out_dir / "reliability_matrix.csv", ["batch_size"] + [a.label for a in aggs], rel_rows)

    payload = {
        "runs": [{"batch_size": b, "aggregator": a.value, **{k: v for k, v in cells[(b, a)].items()}}
                 for b in batch_sizes for a in aggs],
        "overall_reliability": {a.value: (reports[a].overall if reports[a] else None) for a in aggs},
    }
    write_json(out_dir / "compare.json", payload)
    return payload


def analyze_variance(spec: ExperimentSpec, out_dir: Path | None = None, workers: int | None = None) -> RunOutcome:
    """Unbalanced scenario (one starved client) with variance tables."""
    if spec.partition.scheme != "unbalanced":
        spec = replace(spec, partition=replace(spec.partition, scheme="unbalanced"))
    spec = replace(spec, record_variance_analysis=True)
    return run_and_write(spec, out_dir, workers)
