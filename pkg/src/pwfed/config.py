"""Experiment config files.

A config is a flat TOML document whose keys are dotted by section, e.g.::

    dataset.kind = "synthetic"
    dataset.n_train = 5000
    federation.num_clients = 10
    federation.aggregator = "pw"
    partition.scheme = "noniid"

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adam import AdamConfig
from .data import Dataset, synthetic_split
from .errors import ConfigError
from .federation import Aggregator, FederationConfig
from .idx import load_idx
from .nn import MlpArchitecture
from .partition import DatasetPartition, partition_iid, partition_noniid, partition_unbalanced


@dataclass(frozen=True)
class SyntheticSource:
    n_train: int = 5000
    n_test: int = 1000
    num_classes: int = 10
    input_dim: int = 64
    cluster_spread: float = 0.3
    seed: int = 0


@dataclass(frozen=True)
class IdxSource:
    train_images: Path
    train_labels: Path
    test_images: Path
    test_labels: Path
    num_classes: int = 10


@dataclass(frozen=True)
class PartitionSpec:
    scheme: str = "iid"
    classes_per_client: int = 2
    starved_client: int = 0
    starved_fraction: float = 0.02
    classes_for_starved: int = 2
    # None means: use federation.master_seed
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in ("iid", "noniid", "unbalanced"):
            raise ConfigError(f"partition.scheme must be iid, noniid or unbalanced, got {self.scheme!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: SyntheticSource | IdxSource
    arch: MlpArchitecture
    federation: FederationConfig
    adam: AdamConfig = field(default_factory=AdamConfig)
    partition: PartitionSpec = field(default_factory=PartitionSpec)
    output_dir: Path = Path("results")
    record_variance_analysis: bool = False
    targets: tuple[float, ...] = (0.75, 0.80, 0.85)
    burn_in: int = 0
    compare_batch_sizes: tuple[int, ...] = (10, 50)

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        aggregator: str | None = None,
        rounds: int | None = None,
        out: str | Path | None = None,
        batch_size: int | None = None,
    ) -> ExperimentSpec:
        fed = self.federation
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["master_seed"] = seed
        if aggregator is not None:
            changes["aggregator"] = Aggregator.parse(aggregator)
        if rounds is not None:
            changes["rounds"] = rounds
        if batch_size is not None:
            changes["batch_size"] = batch_size
        spec = replace(self, federation=replace(fed, **changes)) if changes else self
        if out is not None:
            spec = replace(spec, output_dir=Path(out))
        return spec

    def load_data(self) -> tuple[Dataset, Dataset]:
        src = self.dataset
        if isinstance(src, SyntheticSource):
            return synthetic_split(
                src.n_train, src.n_test, src.num_classes, src.input_dim, src.cluster_spread, src.seed
            )
        return (
            load_idx(src.train_images, src.train_labels, src.num_classes),
            load_idx(src.test_images, src.test_labels, src.num_classes),
        )

    def make_partition(self, train: Dataset) -> DatasetPartition:
        p = self.partition
        k = self.federation.num_clients
        seed = self.federation.master_seed if p.seed is None else p.seed
        if p.scheme == "iid":
            return partition_iid(train, k, seed)
        if p.scheme == "noniid":
            return partition_noniid(train, k, p.classes_per_client, seed)
        return partition_unbalanced(
            train, k, p.starved_client, p.starved_fraction, p.classes_for_starved, seed
        )


_SECTIONS = ("dataset", "arch", "federation", "adam", "partition", "metrics", "compare", "output")


def _build(cls, values: dict[str, Any], section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}]: {exc}") from exc


def _tuple(value, section_key: str, kind=float) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{section_key} must be a list")
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section_key}: {exc}") from exc


def spec_from_dict(doc: dict[str, Any], base_dir: Path = Path(".")) -> ExperimentSpec:
    extra = set(doc) - set(_SECTIONS)
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    for name in _SECTIONS:
        if name in doc and not isinstance(doc[name], dict):
            raise ConfigError(f"{name} must be a table of dotted keys")

    ds = dict(doc.get("dataset", {}))
    kind = ds.pop("kind", "synthetic")
    if kind == "synthetic":
        source: SyntheticSource | IdxSource = _build(SyntheticSource, ds, "dataset")
    elif kind == "idx":
        for key in ("train_images", "train_labels", "test_images", "test_labels"):
            if key not in ds:
                raise ConfigError(f"dataset.{key} is required for idx datasets")
            path = Path(ds[key])
            path = path if path.is_absolute() else base_dir / path
            if not path.exists():
                raise ConfigError(f"dataset.{key}: {path} does not exist")
            ds[key] = path
        source = _build(IdxSource, ds, "dataset")
    else:
        raise ConfigError(f"dataset.kind must be synthetic or idx, got {kind!r}")

    if isinstance(source, SyntheticSource):
        input_dim, num_classes = source.input_dim, source.num_classes
    else:
        input_dim, num_classes = 784, source.num_classes
    arch_doc = {"input_dim": input_dim, "num_classes": num_classes, **doc.get("arch", {})}
    if "hidden_dims" in arch_doc:
        arch_doc["hidden_dims"] = _tuple(arch_doc["hidden_dims"], "arch.hidden_dims", int)
    arch = _build(MlpArchitecture, arch_doc, "arch")

    fed = _build(FederationConfig, dict(doc.get("federation", {})), "federation")
    adam = _build(AdamConfig, dict(doc.get("adam", {})), "adam")
    partition = _build(PartitionSpec, dict(doc.get("partition", {})), "partition")

    metrics = dict(doc.get("metrics", {}))
    targets = _tuple(metrics.pop("targets", [0.75, 0.80, 0.85]), "metrics.targets")
    burn_in = int(metrics.pop("burn_in", 0))
    if metrics:
        raise ConfigError(f"unknown keys in [metrics]: {', '.join(sorted(metrics))}")

    compare = dict(doc.get("compare", {}))
    batch_sizes = _tuple(compare.pop("batch_sizes", [10, 50]), "compare.batch_sizes", int)
    if compare:
        raise ConfigError(f"unknown keys in [compare]: {', '.join(sorted(compare))}")

    output = dict(doc.get("output", {}))
    out_dir = Path(output.pop("dir", "results"))
    record_var = bool(output.pop("record_variance_analysis", False))
    if output:
        raise ConfigError(f"unknown keys in [output]: {', '.join(sorted(output))}")

    return ExperimentSpec(
        dataset=source,
        arch=arch,
        federation=fed,
        adam=adam,
        partition=partition,
        output_dir=out_dir if out_dir.is_absolute() else base_dir / out_dir,
        record_variance_analysis=record_var,
        targets=targets,
        burn_in=burn_in,
        compare_batch_sizes=batch_sizes,
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return spec_from_dict(doc, path.parent)


def spec_to_dict(spec: ExperimentSpec) -> dict[str, Any]:
    """JSON-friendly view of a spec, for summaries."""

    def plain(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, Aggregator):
            return obj.value
        if isinstance(obj, Path):
            return str(obj)
        if isinstance(obj, tuple):
            return list(obj)
        return obj

    return plain(spec)
