"""In-memory classification datasets and a seeded synthetic generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.inputs.ndim != 2:
            raise ValueError(f"inputs must be 2-D (n, input_dim), got shape {self.inputs.shape}")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.inputs.shape[0]} input rows but {self.labels.shape[0]} labels"
            )
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.inputs[idx], self.labels[idx], self.num_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def generate_synthetic(
    n: int,
    num_classes: int,
    input_dim: int,
    cluster_spread: float,
    seed: int,
    *,
    noise_seed: int = 0,
) -> Dataset:
    """Gaussian clusters around seeded unit-norm class centers.

    Class centers depend only on ``(num_classes, input_dim, seed)``, so a
    train and a test set drawn with the same ``seed`` and different
    ``noise_seed`` share the same underlying classes.
    """
    if n < num_classes:
        raise ValueError(f"n={n} must be >= num_classes={num_classes}")
    if cluster_spread < 0:
        raise ValueError("cluster_spread must be >= 0")
    centers = np.random.default_rng(seed).standard_normal((num_classes, input_dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    rng = np.random.default_rng([seed, noise_seed, 1])
    labels = rng.permutation(np.arange(n) % num_classes)
    inputs = centers[labels] + cluster_spread * rng.standard_normal((n, input_dim))
    return Dataset(inputs, labels, num_classes)


def synthetic_split(
    n_train: int,
    n_test: int,
    num_classes: int,
    input_dim: int,
    cluster_spread: float,
    seed: int,
) -> tuple[Dataset, Dataset]:
    train = generate_synthetic(n_train, num_classes, input_dim, cluster_spread, seed, noise_seed=0)
    test = generate_synthetic(n_test, num_classes, input_dim, cluster_spread, seed, noise_seed=1)
    return train, test
