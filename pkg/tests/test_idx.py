import gzip

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from builders import (
    IDX_EXPECTED_INPUTS,
    IDX_EXPECTED_LABELS,
    IDX_IMAGE_BYTES,
    IDX_LABEL_BYTES,
    make_labelled,
    write_fixture,
)
from pwfed import Dataset, IdxConsistencyError, IdxFormatError, IdxTruncatedError, load_idx
from pwfed.idx import read_idx_images, save_idx, write_idx_images, write_idx_labels


def test_fixture_loads_exactly(tmp_path):
    ds = load_idx(*write_fixture(tmp_path))
    assert ds.inputs.shape == (3, 4)
    assert_array_equal(ds.inputs, IDX_EXPECTED_INPUTS)
    assert_array_equal(ds.labels, IDX_EXPECTED_LABELS)
    assert ds.num_classes == 10
    assert ds.inputs.min() >= 0 and ds.inputs.max() <= 1


def test_images_keep_their_grid(tmp_path):
    img, _ = write_fixture(tmp_path)
    raw = read_idx_images(img)
    assert raw.shape == (3, 2, 2) and raw.dtype == np.uint8
    assert raw[0, 0, 1] == 255


def test_wrong_magic_names_found_value(tmp_path):
    bad = b"\x00\x00\x08\x02" + IDX_IMAGE_BYTES[4:]
    with pytest.raises(IdxFormatError, match="0x00000802"):
        load_idx(*write_fixture(tmp_path, images=bad))


def test_labels_file_in_images_slot(tmp_path):
    with pytest.raises(IdxFormatError):
        load_idx(*write_fixture(tmp_path, images=IDX_LABEL_BYTES, labels=IDX_LABEL_BYTES))


@pytest.mark.parametrize("cut", [0, 3, 10, 16, len(IDX_IMAGE_BYTES) - 1])
def test_truncated_images(tmp_path, cut):
    with pytest.raises(IdxTruncatedError):
        load_idx(*write_fixture(tmp_path, images=IDX_IMAGE_BYTES[:cut]))


def test_truncated_labels(tmp_path):
    with pytest.raises(IdxTruncatedError):
        load_idx(*write_fixture(tmp_path, labels=IDX_LABEL_BYTES[:-1]))


def test_truncation_is_an_io_error(tmp_path):
    with pytest.raises(OSError):
        load_idx(*write_fixture(tmp_path, labels=IDX_LABEL_BYTES[:6]))


def test_trailing_bytes_rejected(tmp_path):
    with pytest.raises(IdxFormatError):
        load_idx(*write_fixture(tmp_path, images=IDX_IMAGE_BYTES + b"\x00"))


def test_count_mismatch(tmp_path):
    two_labels = IDX_LABEL_BYTES[:7] + b"\x02" + IDX_LABEL_BYTES[8:10]
    with pytest.raises(IdxConsistencyError):
        load_idx(*write_fixture(tmp_path, labels=two_labels))


def test_all_zero_pixels(tmp_path):
    img, lbl = tmp_path / "i", tmp_path / "l"
    write_idx_images(img, np.zeros((4, 3, 3), dtype=np.uint8))
    write_idx_labels(lbl, np.array([0, 1, 2, 3]))
    ds = load_idx(img, lbl)
    assert_array_equal(ds.inputs, np.zeros((4, 9)))


def test_gzip_files(tmp_path):
    img, lbl = tmp_path / "i.gz", tmp_path / "l.gz"
    img.write_bytes(gzip.compress(IDX_IMAGE_BYTES))
    lbl.write_bytes(gzip.compress(IDX_LABEL_BYTES))
    assert_array_equal(load_idx(img, lbl).inputs, IDX_EXPECTED_INPUTS)


def test_writer_emits_fixture_bytes(tmp_path):
    img, lbl = tmp_path / "i", tmp_path / "l"
    save_idx(Dataset(IDX_EXPECTED_INPUTS, IDX_EXPECTED_LABELS, 10), img, lbl, 2, 2)
    assert img.read_bytes() == IDX_IMAGE_BYTES
    assert lbl.read_bytes() == IDX_LABEL_BYTES


def test_roundtrip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(3)
    pixels = rng.integers(0, 256, size=(25, 28 * 28))
    ds = Dataset(pixels / 255.0, make_labelled([5] * 5).labels, 5)
    save_idx(ds, tmp_path / "i", tmp_path / "l", 28, 28)
    back = load_idx(tmp_path / "i", tmp_path / "l", num_classes=5)
    assert_array_equal(back.inputs, ds.inputs)
    assert_array_equal(back.labels, ds.labels)


def test_writer_validation(tmp_path):
    ds = Dataset(np.full((2, 4), 1.5), np.array([0, 1]), 2)
    with pytest.raises(ValueError):
        save_idx(ds, tmp_path / "i", tmp_path / "l", 2, 2)
    with pytest.raises(ValueError):
        save_idx(ds, tmp_path / "i", tmp_path / "l", 3, 2)
