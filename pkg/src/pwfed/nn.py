"""Feed-forward classifier: ReLU hidden layers, softmax output, cross-entropy loss.

Parameters are stored per dense layer as ``dense_<i>/kernel`` with shape
``(fan_in, fan_out)`` and ``dense_<i>/bias`` with shape ``(fan_out,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .params import ModelParams


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int = 784
    hidden_dims: tuple[int, ...] = (128,)
    num_classes: int = 10

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ValueError("layer widths must be positive")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_dim, *self.hidden_dims, self.num_classes]
        return list(zip(widths[:-1], widths[1:]))

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        for i, (fan_in, fan_out) in enumerate(self.layer_dims):
            shapes.append((f"dense_{i}/kernel", (fan_in, fan_out)))
            shapes.append((f"dense_{i}/bias", (fan_out,)))
        return shapes

    @property
    def num_params(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.param_shapes())


def check_structure(params: ModelParams, arch: MlpArchitecture) -> None:
    expected = arch.param_shapes()
    got = list(zip(params.names(), params.shapes()))
    if got != expected:
        raise ShapeError(f"params {got} do not match architecture {expected}")


def init_params(arch: MlpArchitecture, seed: int) -> ModelParams:
    """Glorot-uniform kernels and zero biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    entries = []
    for i, (fan_in, fan_out) in enumerate(arch.layer_dims):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        entries.append((f"dense_{i}/kernel", rng.uniform(-limit, limit, size=(fan_in, fan_out))))
        entries.append((f"dense_{i}/bias", np.zeros(fan_out)))
    return ModelParams(entries)


def _as_batch(params: ModelParams, arch: MlpArchitecture, inputs) -> np.ndarray:
    check_structure(params, arch)
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ShapeError(f"inputs must have shape (batch, {arch.input_dim}), got {x.shape}")
    return x


def _forward_cache(params: ModelParams, arch: MlpArchitecture, x: np.ndarray):
    # activations[i] is the input of dense layer i; the last entry is the logits
    activations = [x]
    n_layers = len(arch.layer_dims)
    h = x
    for i in range(n_layers):
        z = h @ params[f"dense_{i}/kernel"] + params[f"dense_{i}/bias"]
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
        activations.append(h)
    return activations


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def logits(params: ModelParams, arch: MlpArchitecture, batch_inputs) -> np.ndarray:
    x = _as_batch(params, arch, batch_inputs)
    return _forward_cache(params, arch, x)[-1]


def forward(params: ModelParams, arch: MlpArchitecture, batch_inputs) -> np.ndarray:
    """Class probabilities of shape ``(batch, num_classes)``."""
    return np.exp(log_softmax(logits(params, arch, batch_inputs)))


def _label_indices(labels, batch: int, num_classes: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim == 2:
        if y.shape != (batch, num_classes):
            raise ShapeError(f"one-hot labels must have shape ({batch}, {num_classes})")
        y = y.argmax(axis=1)
    y = y.astype(np.int64, copy=False).ravel()
    if y.shape[0] != batch:
        raise ShapeError(f"{y.shape[0]} labels for a batch of {batch}")
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    return y


def loss(params: ModelParams, arch: MlpArchitecture, batch_inputs, batch_labels) -> float:
    """Mean categorical cross-entropy, no gradient."""
    z = logits(params, arch, batch_inputs)
    if z.shape[0] == 0:
        raise ValueError("empty batch")
    y = _label_indices(batch_labels, z.shape[0], arch.num_classes)
    return float(-log_softmax(z)[np.arange(y.size), y].mean())


def loss_and_grad(
    params: ModelParams, arch: MlpArchitecture, batch_inputs, batch_labels
) -> tuple[float, ModelParams]:
    """Mean cross-entropy over the batch and its analytic gradient."""
    x = _as_batch(params, arch, batch_inputs)
    batch = x.shape[0]
    if batch == 0:
        raise ValueError("empty batch")
    y = _label_indices(batch_labels, batch, arch.num_classes)

    acts = _forward_cache(params, arch, x)
    logp = log_softmax(acts[-1])
    value = float(-logp[np.arange(batch), y].mean())

    delta = np.exp(logp)
    delta[np.arange(batch), y] -= 1.0
    delta /= batch

    grads: dict[str, np.ndarray] = {}
    for i in reversed(range(len(arch.layer_dims))):
        grads[f"dense_{i}/kernel"] = acts[i].T @ delta
        grads[f"dense_{i}/bias"] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[f"dense_{i}/kernel"].T) * (acts[i] > 0.0)
    ordered = [(name, grads[name]) for name, _ in arch.param_shapes()]
    return value, ModelParams(ordered)


@dataclass
class Predictions:
    """Argmax labels plus mean loss for an evaluation pass."""

    labels: np.ndarray
    loss: float
    probabilities: np.ndarray = field(repr=False)


def predict(params: ModelParams, arch: MlpArchitecture, inputs, labels=None, chunk: int = 4096):
    """Evaluate in chunks so large test sets do not allocate one huge activation."""
    x = _as_batch(params, arch, inputs)
    probs = np.empty((x.shape[0], arch.num_classes))
    predicted = np.empty(x.shape[0], dtype=np.int64)
    total = 0.0
    y = None if labels is None else _label_indices(labels, x.shape[0], arch.num_classes)
    for start in range(0, x.shape[0], chunk):
        stop = start + chunk
        logp = log_softmax(_forward_cache(params, arch, x[start:stop])[-1])
        probs[start:stop] = np.exp(logp)
        # argmax returns the first maximum: ties go to the lowest class index
        predicted[start:stop] = logp.argmax(axis=1)
        if y is not None:
            yy = y[start:stop]
            total -= logp[np.arange(yy.size), yy].sum()
    mean_loss = total / x.shape[0] if (y is not None and x.shape[0]) else float("nan")
    return Predictions(labels=predicted, loss=float(mean_loss), probabilities=probs)
