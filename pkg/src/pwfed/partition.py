"""Splitting a dataset across clients: IID, label-shard non-IID, and one starved client."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass
class DatasetPartition:
    client_indices: list[np.ndarray]

    def __post_init__(self):
        self.client_indices = [np.asarray(ix, dtype=np.int64) for ix in self.client_indices]

    @property
    def num_clients(self) -> int:
        return len(self.client_indices)

    def sizes(self) -> list[int]:
        return [int(ix.size) for ix in self.client_indices]

    def client_data(self, dataset: Dataset, client_id: int) -> Dataset:
        return dataset.subset(self.client_indices[client_id])

    def validate(self, n: int) -> None:
        """Raise ValueError unless lists are non-empty, in range and pairwise disjoint."""
        seen = np.zeros(n, dtype=bool)
        for k, ix in enumerate(self.client_indices):
            if ix.size == 0:
                raise ValueError(f"client {k} has no samples")
            if ix.min() < 0 or ix.max() >= n:
                raise ValueError(f"client {k} holds an index outside [0, {n})")
            if np.unique(ix).size != ix.size or seen[ix].any():
                raise ValueError(f"client {k} shares indices with another client")
            seen[ix] = True


def _per_class(order: np.ndarray, labels: np.ndarray, num_classes: int) -> list[np.ndarray]:
    lab = labels[order]
    return [order[lab == c] for c in range(num_classes)]


def _deal_stratified(by_class: list[np.ndarray], num_clients: int) -> list[np.ndarray]:
    """Give each client floor(n_c/K) of every class c.

    Per-class remainders go out round-robin, continuing where the previous
    class stopped, so totals also stay within one sample of each other.
    """
    buckets: list[list[np.ndarray]] = [[] for _ in range(num_clients)]
    offset = 0
    for idx in by_class:
        q, r = divmod(idx.size, num_clients)
        start = 0
        for k in range(num_clients):
            take = q + (1 if (k - offset) % num_clients < r else 0)
            buckets[k].append(idx[start:start + take])
            start += take
        offset = (offset + r) % num_clients
    return [np.sort(np.concatenate(b)) if b else np.zeros(0, dtype=np.int64) for b in buckets]


def partition_iid(dataset: Dataset, num_clients: int, seed: int) -> DatasetPartition:
    n = len(dataset)
    if num_clients < 1:
        raise ValueError("num_clients must be >= 1")
    if num_clients > n:
        raise ValueError(f"cannot split {n} samples over {num_clients} clients")
    order = np.random.default_rng(seed).permutation(n)
    by_class = _per_class(order, dataset.labels, dataset.num_classes)
    return DatasetPartition(_deal_stratified(by_class, num_clients))


def _allocate_shards(counts: np.ndarray, total: int, cap: int) -> np.ndarray:
    # Greedy: each extra shard goes to the class whose shards are currently largest.
    shards = np.ones(counts.size, dtype=np.int64)
    for _ in range(total - counts.size):
        size = np.where(shards < cap, counts / shards, -np.inf)
        shards[int(np.argmax(size))] += 1
    return shards


def partition_noniid(
    dataset: Dataset, num_clients: int, classes_per_client: int = 2, seed: int = 0
) -> DatasetPartition:
    """Label-sorted shards dealt so each client sees at most ``classes_per_client`` labels.

    Every class is cut into equal-size shards, K * classes_per_client in
    total, and shards are dealt round-robin over a seeded class order. Shards
    of one class land on distinct clients, so each client ends up with
    exactly ``classes_per_client`` shards and the same sample count. Samples
    left over after cutting equal shards are not assigned to anyone.
    """
    if num_clients < 1 or classes_per_client < 1:
        raise ValueError("num_clients and classes_per_client must be >= 1")
    counts_all = dataset.class_counts()
    present = np.flatnonzero(counts_all)
    m = min(classes_per_client, present.size)
    total = num_clients * m
    if total < present.size:
        raise ValueError(
            f"{present.size} classes cannot be covered by {num_clients} clients x "
            f"{classes_per_client} classes each"
        )
    counts = counts_all[present]
    shards = _allocate_shards(counts, total, num_clients)
    shard_size = int(np.min(counts // shards))
    if shard_size < 1:
        worst = int(present[np.argmin(counts // shards)])
        raise ValueError(
            f"infeasible shard assignment: class {worst} has {counts_all[worst]} samples "
            f"for {shards[np.argmin(counts // shards)]} shards"
        )

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    by_class = _per_class(order, dataset.labels, dataset.num_classes)
    shard_list: list[np.ndarray] = []
    for pos in rng.permutation(present.size):
        idx = by_class[present[pos]]
        for s in range(shards[pos]):
            shard_list.append(idx[s * shard_size:(s + 1) * shard_size])

    owner = rng.permutation(num_clients)
    buckets: list[list[np.ndarray]] = [[] for _ in range(num_clients)]
    for i, shard in enumerate(shard_list):
        buckets[owner[i % num_clients]].append(shard)
    return DatasetPartition([np.sort(np.concatenate(b)) for b in buckets])


def partition_unbalanced(
    dataset: Dataset,
    num_clients: int,
    starved_client: int,
    starved_fraction: float,
    classes_for_starved: int,
    seed: int,
) -> DatasetPartition:
    """One client gets a small slice of a few labels; the others split the rest IID."""
    n = len(dataset)
    if num_clients < 2:
        raise ValueError("the unbalanced scenario needs at least 2 clients")
    if not 0 <= starved_client < num_clients:
        raise ValueError(f"starved_client must lie in [0, {num_clients})")
    if not 0.0 < starved_fraction < 1.0 / num_clients:
        raise ValueError(f"starved_fraction must lie in (0, 1/{num_clients})")
    count = math.floor(starved_fraction * n)
    if count < 1:
        raise ValueError(
            f"starved_fraction={starved_fraction} of {n} samples gives the starved client none"
        )
    present = np.flatnonzero(dataset.class_counts())
    if not 1 <= classes_for_starved <= present.size:
        raise ValueError(f"classes_for_starved must lie in [1, {present.size}]")

    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(present, size=classes_for_starved, replace=False))
    order = rng.permutation(n)
    by_class = _per_class(order, dataset.labels, dataset.num_classes)

    q, r = divmod(count, classes_for_starved)
    starved_parts = []
    for j, c in enumerate(chosen):
        take = q + (1 if j < r else 0)
        if take > by_class[c].size:
            raise ValueError(
                f"class {c} has {by_class[c].size} samples, starved client needs {take}"
            )
        starved_parts.append(by_class[c][:take])
        by_class[c] = by_class[c][take:]

    rest = _deal_stratified(by_class, num_clients - 1)
    others = iter(rest)
    clients = [
        np.sort(np.concatenate(starved_parts)) if k == starved_client else next(others)
        for k in range(num_clients)
    ]
    return DatasetPartition(clients)
