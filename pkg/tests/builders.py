"""Small dataset builders shared by several test modules."""

import numpy as np

from pwfed import Dataset


def make_labelled(counts, input_dim=3, seed=0):
    """Dataset whose class c has counts[c] rows."""
    labels = np.repeat(np.arange(len(counts)), counts)
    rng = np.random.default_rng(seed)
    labels = rng.permutation(labels)
    return Dataset(rng.standard_normal((labels.size, input_dim)), labels, len(counts))


# three 2x2 images, written out byte by byte
IDX_IMAGE_BYTES = bytes(
    [0x00, 0x00, 0x08, 0x03,
     0x00, 0x00, 0x00, 0x03,
     0x00, 0x00, 0x00, 0x02,
     0x00, 0x00, 0x00, 0x02,
     0x00, 0xFF, 0x80, 0x01,
     0x10, 0x20, 0x30, 0x40,
     0xFF, 0xFF, 0x00, 0x00]
)
IDX_LABEL_BYTES = bytes(
    [0x00, 0x00, 0x08, 0x01,
     0x00, 0x00, 0x00, 0x03,
     0x07, 0x00, 0x02]
)
IDX_EXPECTED_INPUTS = np.array(
    [[0, 255, 128, 1], [16, 32, 48, 64], [255, 255, 0, 0]], dtype=np.float64
) / 255.0
IDX_EXPECTED_LABELS = np.array([7, 0, 2])


def write_fixture(directory, images=IDX_IMAGE_BYTES, labels=IDX_LABEL_BYTES):
    img, lbl = directory / "images.idx", directory / "labels.idx"
    img.write_bytes(images)
    lbl.write_bytes(labels)
    return img, lbl
