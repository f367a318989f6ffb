"""Adam optimizer whose raw second moment doubles as a per-weight variance proxy."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .params import ModelParams, VarianceEstimate


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    # report v / (1 - beta2**t) instead of the raw accumulator as the variance
    bias_corrected_variance: bool = False

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class AdamState:
    step: int
    m: ModelParams
    v: ModelParams

    @classmethod
    def fresh(cls, params: ModelParams) -> AdamState:
        return cls(step=0, m=params.zeros_like(), v=params.zeros_like())


def variance_snapshot(state: AdamState, cfg: AdamConfig) -> ModelParams:
    """Copy of the second moment, raw unless the config asks for bias correction."""
    if cfg.bias_corrected_variance and state.step > 0:
        scale = 1.0 / (1.0 - cfg.beta2 ** state.step)
        return state.v.map(lambda v: v * scale)
    return state.v.copy()


def adam_step(
    params: ModelParams, grads: ModelParams, state: AdamState, cfg: AdamConfig
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    params.check_compatible(grads, "grads")
    params.check_compatible(state.m, "first moment")
    params.check_compatible(state.v, "second moment")
    if not grads.all_finite():
        raise NumericError("non-finite gradient entry; Adam step aborted")

    t = state.step + 1
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t

    new_params, new_m, new_v = [], [], []
    for name, w in params.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_params.append((name, w - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)))
        new_m.append((name, m))
        new_v.append((name, v))
    return ModelParams(new_params), AdamState(step=t, m=ModelParams(new_m), v=ModelParams(new_v))


def tail_length(steps_in_last_epoch: int) -> int:
    """Steps making up the second half of an epoch: ceil(S / 2)."""
    return math.ceil(steps_in_last_epoch / 2)


def mean_snapshots(snapshots: Sequence[ModelParams]) -> VarianceEstimate:
    if not snapshots:
        raise ValueError("no second-moment snapshots to average")
    first = snapshots[0]
    total = {name: np.zeros_like(t) for name, t in first.items()}
    for snap in snapshots:
        first.check_compatible(snap, "second-moment snapshot")
        for name, t in snap.items():
            total[name] += t
    n = len(snapshots)
    return VarianceEstimate((name, acc / n) for name, acc in total.items())


def capture_variance(
    step_history: Sequence[ModelParams], steps_in_last_epoch: int
) -> VarianceEstimate:
    """Average the second-moment snapshots over the second half of the last epoch.

    ``step_history`` holds one snapshot per optimizer step, oldest first; the
    final ``steps_in_last_epoch`` entries belong to the last epoch.
    """
    if not step_history:
        raise ValueError("step_history is empty")
    if not 1 <= steps_in_last_epoch <= len(step_history):
        raise ValueError(
            f"steps_in_last_epoch={steps_in_last_epoch} outside [1, {len(step_history)}]"
        )
    return mean_snapshots(step_history[-tail_length(steps_in_last_epoch):])
