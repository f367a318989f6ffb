"""Accuracy, reliability index, rounds-to-target and inverse-variance analysis."""

from __future__ import annotations

import math
import statistics
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import nn
from .params import ModelParams

if TYPE_CHECKING:
    from .data import Dataset
    from .federation import ClientUpdate


@dataclass
class RoundRecord:
    round: int
    aggregator: str
    batch_size: int
    test_accuracy: float
    test_loss: float
    participating_clients: list[int]
    per_layer_mean_inv_variance: list[tuple[str, float]] = field(default_factory=list)


def evaluate(params: ModelParams, arch: nn.MlpArchitecture, test_set: Dataset) -> tuple[float, float]:
    """Top-1 accuracy and mean cross-entropy on ``test_set``."""
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    pred = nn.predict(params, arch, test_set.inputs, test_set.labels)
    return float(np.mean(pred.labels == test_set.labels)), pred.loss


def test_accuracy(params: ModelParams, arch: nn.MlpArchitecture, test_set: Dataset) -> float:
    return evaluate(params, arch, test_set)[0]


# keep pytest from collecting the function above when it is imported into a test module
test_accuracy.__test__ = False


def reliability_from_moments(mean: float, std: float) -> float:
    """(1 - std/mean) * 100."""
    if mean == 0:
        raise ZeroDivisionError("reliability index undefined for zero mean accuracy")
    return (1.0 - std / mean) * 100.0


def reliability_index(accuracies: Sequence[float], burn_in: int = 0) -> float:
    """Reliability of an accuracy sequence, using the sample (n-1) standard deviation.

    The first ``burn_in`` entries are skipped.
    """
    values = [float(a) for a in accuracies][burn_in:]
    if len(values) < 2:
        raise ValueError("reliability index needs at least 2 accuracies")
    return reliability_from_moments(statistics.fmean(values), statistics.stdev(values))


def overall_reliability(per_config: Sequence[float]) -> float:
    if not per_config:
        raise ValueError("no reliability indices to average")
    return statistics.fmean(per_config)


@dataclass
class ReliabilityReport:
    per_config: list[tuple[str, float]]
    overall: float

    @classmethod
    def from_indices(cls, per_config: Sequence[tuple[str, float]]) -> ReliabilityReport:
        items = list(per_config)
        return cls(items, overall_reliability([xi for _, xi in items]))


def rounds_to_target(records: Sequence[RoundRecord], target: float) -> int | None:
    """First round whose accuracy reaches ``target``; None if it never does."""
    for rec in records:
        if rec.test_accuracy >= target:
            return rec.round
    return None


def speedup(rounds_baseline: int | None, rounds_method: int | None) -> float | None:
    if rounds_baseline is None or rounds_method is None:
        return None
    if rounds_baseline < 1 or rounds_method < 1:
        raise ValueError("round counts must be >= 1")
    return rounds_baseline / rounds_method


def mean_inverse_variance(variance: Mapping[str, np.ndarray] | ModelParams, epsilon: float) -> float:
    """Mean of 1/(v + eps) over every scalar position."""
    total, count = 0.0, 0
    for _, v in variance.items():
        total += float(np.sum(1.0 / (v + epsilon)))
        count += v.size
    return total / count


def per_layer_mean_inverse_variance(
    variances: Sequence[ModelParams], epsilon: float
) -> list[tuple[str, float]]:
    """Per-layer mean of 1/(v + eps), averaged over the given clients."""
    if not variances:
        return []
    out = []
    for name in variances[0]:
        out.append((name, float(np.mean([np.mean(1.0 / (v[name] + epsilon)) for v in variances]))))
    return out


def minmax_normalize(values: Sequence[float]) -> list[float]:
    """Scale to [0, 1]; a constant series maps to all zeros."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return []
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return [0.0] * arr.size
    return [float(x) for x in (arr - lo) / (hi - lo)]


@dataclass
class VarianceAnalysis:
    """Inverse-variance summaries over a run.

    ``by_round[client]`` lists ``(round, mean inverse variance)`` for the
    rounds the client took part in; ``by_layer[(layer, client)]`` is the
    per-layer mean at the first recorded round.
    """

    by_round: dict[int, list[tuple[int, float]]]
    by_round_normalized: dict[int, list[tuple[int, float]]]
    by_layer: dict[tuple[str, int], float]
    by_layer_normalized: dict[tuple[str, int], float]
    epsilon: float
    metadata: dict[str, str] = field(default_factory=lambda: {
        "normalization": "min-max per series; a constant series is emitted as 0",
        "layer_normalization": "min-max jointly over all (layer, client) points of the first round",
    })


def variance_analysis(
    updates_per_round: Sequence[Sequence[ClientUpdate]], epsilon: float = 1e-9
) -> VarianceAnalysis:
    """Mean of 1/(v + eps) per client and round, v being each update's gradient second moment."""
    if not updates_per_round:
        raise ValueError("variance analysis needs at least one round of updates")
    by_round: dict[int, list[tuple[int, float]]] = {}
    for r, updates in enumerate(updates_per_round, start=1):
        for u in updates:
            by_round.setdefault(u.client_id, []).append((r, mean_inverse_variance(u.second_moment, epsilon)))
    by_round = dict(sorted(by_round.items()))
    normalized = {}
    for client, series in by_round.items():
        scaled = minmax_normalize([value for _, value in series])
        normalized[client] = [(r, s) for (r, _), s in zip(series, scaled)]

    by_layer: dict[tuple[str, int], float] = {}
    for u in sorted(updates_per_round[0], key=lambda u: u.client_id):
        for name, v in u.second_moment.items():
            by_layer[(name, u.client_id)] = float(np.mean(1.0 / (v + epsilon)))
    keys = list(by_layer)
    by_layer_norm = dict(zip(keys, minmax_normalize([by_layer[k] for k in keys])))
    return VarianceAnalysis(by_round, normalized, by_layer, by_layer_norm, epsilon)


def accuracy_moments(records: Sequence[RoundRecord], burn_in: int = 0) -> tuple[float, float]:
    """Mean and sample standard deviation of test accuracy after ``burn_in`` rounds."""
    values = [r.test_accuracy for r in records][burn_in:]
    if not values:
        return math.nan, math.nan
    if len(values) == 1:
        return values[0], 0.0
    return statistics.fmean(values), statistics.stdev(values)
