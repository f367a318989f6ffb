"""Named parameter collections exchanged between clients and the server."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator

import numpy as np

from .errors import ShapeError


class ModelParams:
    """Ordered mapping of layer name to a float64 tensor.

    The insertion order is the canonical serialization order. Two instances
    are structure-compatible when names, order and shapes all match.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[str, np.ndarray]] = ()):
        self._entries: dict[str, np.ndarray] = {}
        for name, tensor in entries:
            if name in self._entries:
                raise ValueError(f"duplicate layer name {name!r}")
            self._entries[name] = np.asarray(tensor, dtype=np.float64)

    @classmethod
    def from_dict(cls, mapping: dict[str, np.ndarray]) -> ModelParams:
        return cls(mapping.items())

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __repr__(self) -> str:
        body = ", ".join(f"{k}{tuple(v.shape)}" for k, v in self._entries.items())
        return f"{type(self).__name__}({body})"

    def items(self):
        return self._entries.items()

    def names(self) -> list[str]:
        return list(self._entries)

    def shapes(self) -> list[tuple[int, ...]]:
        return [tuple(v.shape) for v in self._entries.values()]

    @property
    def num_scalars(self) -> int:
        return int(sum(v.size for v in self._entries.values()))

    def is_compatible(self, other: ModelParams) -> bool:
        return self.names() == other.names() and self.shapes() == other.shapes()

    def check_compatible(self, other: ModelParams, what: str = "params") -> None:
        if not self.is_compatible(other):
            raise ShapeError(
                f"{what} structure mismatch: {list(zip(self.names(), self.shapes()))} "
                f"vs {list(zip(other.names(), other.shapes()))}"
            )

    def copy(self) -> ModelParams:
        return type(self)((k, v.copy()) for k, v in self._entries.items())

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> ModelParams:
        return ModelParams((k, fn(v)) for k, v in self._entries.items())

    def zeros_like(self) -> ModelParams:
        return ModelParams((k, np.zeros_like(v)) for k, v in self._entries.items())

    def flatten(self) -> np.ndarray:
        """Concatenate every tensor in canonical order into one vector."""
        if not self._entries:
            return np.zeros(0)
        return np.concatenate([v.ravel() for v in self._entries.values()])

    def unflatten(self, flat: np.ndarray) -> ModelParams:
        """Inverse of :meth:`flatten` using this instance's structure."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.num_scalars:
            raise ShapeError(f"expected {self.num_scalars} scalars, got {flat.size}")
        out, offset = [], 0
        for name, tensor in self._entries.items():
            out.append((name, flat[offset:offset + tensor.size].reshape(tensor.shape).copy()))
            offset += tensor.size
        return ModelParams(out)

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self._entries.values())

    def equals(self, other: ModelParams) -> bool:
        """Bit-exact equality of structure and values."""
        return self.is_compatible(other) and all(
            np.array_equal(v, other[k]) for k, v in self._entries.items()
        )


class VarianceEstimate(ModelParams):
    """Per-scalar non-negative variance proxy, structured like ModelParams."""

    __slots__ = ()

    def __init__(self, entries: Iterable[tuple[str, np.ndarray]] = ()):
        super().__init__(entries)
        for name, tensor in self._entries.items():
            if not np.all(tensor >= 0):
                raise ValueError(f"variance entries must be >= 0 (layer {name!r})")
