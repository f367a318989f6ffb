"""Reader and writer for the big-endian IDX container (MNIST / Fashion-MNIST files).

File layout::

    i32  magic       0x00000803 for images, 0x00000801 for labels
    i32  count
    i32  rows, cols  (images only)
    u8[] payload     row-major
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import IdxConsistencyError, IdxFormatError, IdxTruncatedError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse(raw: bytes, expected_magic: int, ndims: int, path) -> np.ndarray:
    header_len = 4 * (1 + ndims)
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: file too short for an IDX magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxFormatError(
            f"{path}: magic number 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    if len(raw) < header_len:
        raise IdxTruncatedError(f"{path}: header truncated ({len(raw)} of {header_len} bytes)")
    dims = struct.unpack(f">{ndims}I", raw[4:header_len])
    size = int(np.prod(dims, dtype=np.int64))
    payload = raw[header_len:]
    if len(payload) < size:
        raise IdxTruncatedError(f"{path}: payload truncated ({len(payload)} of {size} bytes)")
    if len(payload) > size:
        raise IdxFormatError(f"{path}: {len(payload) - size} trailing bytes after payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def read_idx_images(path: str | Path) -> np.ndarray:
    """uint8 array of shape (count, rows, cols)."""
    return _parse(_read_bytes(path), IMAGES_MAGIC, 3, path)


def read_idx_labels(path: str | Path) -> np.ndarray:
    return _parse(_read_bytes(path), LABELS_MAGIC, 1, path)


def load_idx(images_path: str | Path, labels_path: str | Path, num_classes: int | None = None) -> Dataset:
    """Images flattened to rows and scaled to [0, 1] by /255.

    ``num_classes`` defaults to max(label) + 1, and to 10 when that is smaller.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} "
            f"holds {labels.shape[0]} labels"
        )
    inputs = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    if num_classes is None:
        num_classes = max(int(labels.max()) + 1 if labels.size else 0, 10)
    return Dataset(inputs, labels.astype(np.int64), num_classes)


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    images = np.asarray(images)
    if images.ndim != 3:
        raise ValueError("images must have shape (count, rows, cols)")
    if images.dtype != np.uint8:
        raise ValueError("images must be uint8")
    header = struct.pack(">4I", IMAGES_MAGIC, *images.shape)
    Path(path).write_bytes(header + images.tobytes(order="C"))


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must be a 1-D array of values in [0, 255]")
    header = struct.pack(">2I", LABELS_MAGIC, labels.shape[0])
    Path(path).write_bytes(header + labels.astype(np.uint8).tobytes())


def save_idx(dataset: Dataset, images_path: str | Path, labels_path: str | Path, rows: int, cols: int) -> None:
    """Write a dataset whose inputs are multiples of 1/255 back to IDX files."""
    if rows * cols != dataset.input_dim:
        raise ValueError(f"{rows}x{cols} does not match input_dim {dataset.input_dim}")
    quantized = np.rint(dataset.inputs * 255.0)
    if quantized.min(initial=0) < 0 or quantized.max(initial=0) > 255:
        raise ValueError("inputs must lie in [0, 1]")
    write_idx_images(images_path, quantized.astype(np.uint8).reshape(len(dataset), rows, cols))
    write_idx_labels(labels_path, dataset.labels)
