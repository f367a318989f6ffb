"""Federated learning simulator: FedAvg versus precision-weighted aggregation.

Precision-weighted aggregation weights every client's parameter by the
inverse of the Adam second moment it accumulated while training.
"""

from .adam import AdamConfig, AdamState, adam_step, capture_variance
from .data import Dataset, generate_synthetic, synthetic_split
from .errors import (
    ConfigError,
    IdxConsistencyError,
    IdxFormatError,
    IdxTruncatedError,
    NumericError,
    ShapeError,
)
from .federation import (
    Aggregator,
    ClientUpdate,
    ExperimentResult,
    FederationConfig,
    aggregate_fedavg,
    aggregate_precision_weighted,
    client_train,
    run_experiment,
    run_round,
)
from .idx import load_idx
from .metrics import (
    RoundRecord,
    overall_reliability,
    reliability_index,
    rounds_to_target,
    speedup,
    test_accuracy,
    variance_analysis,
)
from .nn import MlpArchitecture, forward, init_params, loss_and_grad
from .params import ModelParams, VarianceEstimate
from .partition import DatasetPartition, partition_iid, partition_noniid, partition_unbalanced

__version__ = "0.1.0"
