"""Client-local training, the two aggregation rules, and the round protocol."""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .adam import AdamConfig, AdamState, adam_step, mean_snapshots, tail_length, variance_snapshot
from .data import Dataset
from .errors import ShapeError
from .metrics import RoundRecord, evaluate, per_layer_mean_inverse_variance
from .params import ModelParams, VarianceEstimate
from .partition import DatasetPartition

log = logging.getLogger(__name__)


class Aggregator(str, enum.Enum):
    FEDAVG = "fedavg"
    PRECISION_WEIGHTED = "pw"

    @classmethod
    def parse(cls, value: str | Aggregator) -> Aggregator:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "fedavg": cls.FEDAVG,
            "pw": cls.PRECISION_WEIGHTED,
            "precision_weighted": cls.PRECISION_WEIGHTED,
            "precisionweighted": cls.PRECISION_WEIGHTED,
        }
        if key not in aliases:
            raise ValueError(f"unknown aggregator {value!r} (expected fedavg or pw)")
        return aliases[key]

    @property
    def label(self) -> str:
        return "FedAvg" if self is Aggregator.FEDAVG else "PW"


class VarianceSource(str, enum.Enum):
    """What a client reports as the variance of its weight estimates.

    ``INVERSE_SECOND_MOMENT`` treats the averaged Adam second moment as a
    diagonal Fisher information, so the estimator variance is its inverse and
    precision weighting ends up proportional to the second moment.
    ``SECOND_MOMENT`` hands the averaged second moment to the aggregator as
    the variance itself.
    """

    INVERSE_SECOND_MOMENT = "inverse_second_moment"
    SECOND_MOMENT = "second_moment"


@dataclass(frozen=True)
class FederationConfig:
    num_clients: int = 10
    client_fraction: float = 1.0
    batch_size: int = 50
    local_epochs: int = 1
    rounds: int = 30
    aggregator: Aggregator = Aggregator.FEDAVG
    aggregation_epsilon: float = 1e-9
    master_seed: int = 0
    reset_optimizer_per_round: bool = True
    variance_source: VarianceSource = VarianceSource.INVERSE_SECOND_MOMENT

    def __post_init__(self):
        object.__setattr__(self, "aggregator", Aggregator.parse(self.aggregator))
        object.__setattr__(self, "variance_source", VarianceSource(self.variance_source))
        if self.num_clients < 1:
            raise ValueError("num_clients must be >= 1")
        if not 0.0 < self.client_fraction <= 1.0:
            raise ValueError("client_fraction must lie in (0, 1]")
        if self.batch_size < 1 or self.local_epochs < 1:
            raise ValueError("batch_size and local_epochs must be >= 1")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.aggregation_epsilon <= 0:
            raise ValueError("aggregation_epsilon must be > 0")

    @property
    def clients_per_round(self) -> int:
        # the 1e-9 slack keeps e.g. 0.29 * 100 from flooring to 28
        return max(math.floor(self.client_fraction * self.num_clients + 1e-9), 1)


@dataclass
class ClientUpdate:
    """One client's round output.

    ``variance`` feeds precision weighting. ``second_moment`` is the averaged
    raw Adam second moment of the gradient it was derived from; when omitted
    it is taken to be ``variance`` itself.
    """

    client_id: int
    n_k: int
    params: ModelParams
    variance: VarianceEstimate
    second_moment: VarianceEstimate | None = None
    train_loss: float = float("nan")
    optimizer_state: AdamState | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_k < 1:
            raise ValueError("n_k must be positive")
        self.params.check_compatible(self.variance, "variance")
        if self.second_moment is None:
            self.second_moment = self.variance
        else:
            self.params.check_compatible(self.second_moment, "second moment")


def estimator_variance(
    second_moment: VarianceEstimate, source: VarianceSource, epsilon: float
) -> VarianceEstimate:
    if source is VarianceSource.SECOND_MOMENT:
        return second_moment
    return VarianceEstimate((name, 1.0 / (v + epsilon)) for name, v in second_moment.items())


def client_train(
    global_params: ModelParams,
    client_data: Dataset,
    cfg: FederationConfig,
    arch: nn.MlpArchitecture,
    adam_cfg: AdamConfig,
    client_seed: int,
    *,
    client_id: int = 0,
    state: AdamState | None = None,
) -> ClientUpdate:
    """Run ``cfg.local_epochs`` epochs of mini-batch Adam on one client's data.

    The second moment is averaged over the last ceil(S/2) steps of the
    final epoch, S being the steps in that epoch, and turned into a variance
    according to ``cfg.variance_source``. Pass ``state`` to continue from an
    earlier optimizer state instead of a fresh one.
    """
    n = len(client_data)
    if n == 0:
        raise ValueError(f"client {client_id} has no data")
    rng = np.random.default_rng(client_seed)
    params = global_params.copy()
    state = AdamState.fresh(params) if state is None else state
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    keep_from = steps_per_epoch - tail_length(steps_per_epoch)

    tail: list[ModelParams] = []
    losses = []
    for epoch in range(cfg.local_epochs):
        order = rng.permutation(n)
        last_epoch = epoch == cfg.local_epochs - 1
        for step in range(steps_per_epoch):
            batch = order[step * cfg.batch_size:(step + 1) * cfg.batch_size]
            value, grads = nn.loss_and_grad(
                params, arch, client_data.inputs[batch], client_data.labels[batch]
            )
            params, state = adam_step(params, grads, state, adam_cfg)
            if last_epoch:
                losses.append(value)
                if step >= keep_from:
                    tail.append(variance_snapshot(state, adam_cfg))

    second_moment = mean_snapshots(tail)
    return ClientUpdate(
        client_id=client_id,
        n_k=n,
        params=params,
        variance=estimator_variance(second_moment, cfg.variance_source, cfg.aggregation_epsilon),
        second_moment=second_moment,
        train_loss=float(np.mean(losses)),
        optimizer_state=state,
    )


def _check_updates(updates: Sequence[ClientUpdate]) -> ModelParams:
    if not updates:
        raise ValueError("no client updates to aggregate")
    ref = updates[0].params
    for u in updates[1:]:
        if not ref.is_compatible(u.params):
            raise ShapeError(f"client {u.client_id} params do not match client {updates[0].client_id}")
    return ref


def aggregate_fedavg(updates: Sequence[ClientUpdate]) -> ModelParams:
    """Sample-size weighted mean over the participating clients."""
    ref = _check_updates(updates)
    sizes = np.array([u.n_k for u in updates], dtype=np.float64)
    weights = sizes / sizes.sum()
    out = []
    for name in ref:
        acc = weights[0] * updates[0].params[name]
        for w, u in zip(weights[1:], updates[1:]):
            acc = acc + w * u.params[name]
        out.append((name, acc))
    return ModelParams(out)


def aggregate_precision_weighted(
    updates: Sequence[ClientUpdate], epsilon: float = 1e-9
) -> ModelParams:
    """Inverse-variance weighted mean, one weight per scalar position and client.

    Weights are normalized before the weighted sum so a single client comes
    back bit-for-bit unchanged.
    """
    ref = _check_updates(updates)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    for u in updates:
        ref.check_compatible(u.variance, f"client {u.client_id} variance")
        for name, v in u.variance.items():
            if not np.all(v >= 0):
                raise ValueError(f"client {u.client_id} has negative variance in {name!r}")
    out = []
    for name in ref:
        precisions = [1.0 / (u.variance[name] + epsilon) for u in updates]
        total = precisions[0]
        for p in precisions[1:]:
            total = total + p
        acc = (precisions[0] / total) * updates[0].params[name]
        for p, u in zip(precisions[1:], updates[1:]):
            acc = acc + (p / total) * u.params[name]
        out.append((name, acc))
    return ModelParams(out)


def aggregate(updates: Sequence[ClientUpdate], cfg: FederationConfig) -> ModelParams:
    if cfg.aggregator is Aggregator.FEDAVG:
        return aggregate_fedavg(updates)
    return aggregate_precision_weighted(updates, cfg.aggregation_epsilon)


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def sample_clients(cfg: FederationConfig, round_idx: int) -> list[int]:
    """Uniform sample without replacement, seeded by (master_seed, round), sorted by id."""
    rng = np.random.default_rng([cfg.master_seed, round_idx])
    picked = rng.choice(cfg.num_clients, size=cfg.clients_per_round, replace=False)
    return sorted(int(k) for k in picked)


def run_round(
    round_idx: int,
    global_params: ModelParams,
    partition: DatasetPartition,
    dataset: Dataset,
    cfg: FederationConfig,
    arch: nn.MlpArchitecture,
    adam_cfg: AdamConfig,
    *,
    optimizer_states: dict[int, AdamState] | None = None,
    max_workers: int | None = None,
) -> tuple[ModelParams, list[ClientUpdate]]:
    """Broadcast, train the sampled clients, aggregate.

    ``optimizer_states`` is read and updated in place when Adam state is
    carried across rounds. Updates come back ordered by client id whatever
    the execution order was.
    """
    if round_idx < 1:
        raise ValueError("round_idx starts at 1")
    if partition.num_clients != cfg.num_clients:
        raise ValueError(
            f"partition has {partition.num_clients} clients, config expects {cfg.num_clients}"
        )
    selected = sample_clients(cfg, round_idx)
    carry = not cfg.reset_optimizer_per_round and optimizer_states is not None

    def train(k: int) -> ClientUpdate:
        return client_train(
            global_params,
            partition.client_data(dataset, k),
            cfg,
            arch,
            adam_cfg,
            _derive_seed(cfg.master_seed, round_idx, k),
            client_id=k,
            state=optimizer_states.get(k) if carry else None,
        )

    if max_workers and max_workers > 1 and len(selected) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            updates = list(pool.map(train, selected))
    else:
        updates = [train(k) for k in selected]
    updates.sort(key=lambda u: u.client_id)
    if carry:
        for u in updates:
            optimizer_states[u.client_id] = u.optimizer_state
    return aggregate(updates, cfg), updates


@dataclass
class ExperimentResult:
    records: list[RoundRecord]
    initial_params: ModelParams
    final_params: ModelParams


RoundHook = Callable[[int, ModelParams, list[ClientUpdate]], None]


def run_experiment(
    cfg: FederationConfig,
    dataset: Dataset,
    test_set: Dataset,
    arch: nn.MlpArchitecture,
    adam_cfg: AdamConfig,
    partition: DatasetPartition,
    *,
    on_round: RoundHook | None = None,
    max_workers: int | None = None,
) -> ExperimentResult:
    """Shared initialization, then ``cfg.rounds`` rounds with evaluation after each."""
    partition.validate(len(dataset))
    init = nn.init_params(arch, cfg.master_seed)
    params = init
    states: dict[int, AdamState] = {}
    records = []
    for r in range(1, cfg.rounds + 1):
        params, updates = run_round(
            r, params, partition, dataset, cfg, arch, adam_cfg,
            optimizer_states=states, max_workers=max_workers,
        )
        acc, test_loss = evaluate(params, arch, test_set)
        records.append(
            RoundRecord(
                round=r,
                aggregator=cfg.aggregator.value,
                batch_size=cfg.batch_size,
                test_accuracy=acc,
                test_loss=test_loss,
                participating_clients=[u.client_id for u in updates],
                per_layer_mean_inv_variance=per_layer_mean_inverse_variance(
                    [u.second_moment for u in updates], cfg.aggregation_epsilon
                ),
            )
        )
        log.debug("round %d %s acc=%.4f loss=%.4f", r, cfg.aggregator.value, acc, test_loss)
        if on_round is not None:
            on_round(r, params, updates)
    return ExperimentResult(records=records, initial_params=init, final_params=params)
