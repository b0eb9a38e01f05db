"""Dataset file formats, parse errors, and the clustered generator."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynann.datasets import (
    DatasetParseError,
    generate_clustered,
    load_dataset,
    load_ground_truth,
    save_dataset,
    save_ground_truth,
)


def test_fvecs_single_row(tmp_path):
    path = tmp_path / "one.fvecs"
    with open(path, "wb") as f:
        f.write(struct.pack("<i", 4))
        f.write(np.array([1, 2, 3, 4], dtype="<f4").tobytes())
    data = load_dataset(str(path))
    assert data.shape == (1, 4)
    np.testing.assert_array_equal(data[0], [1, 2, 3, 4])


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.fvecs"
    path.write_bytes(b"")
    with pytest.raises(DatasetParseError, match="offset 0"):
        load_dataset(str(path))


def test_inconsistent_dims_reports_offset(tmp_path):
    path = tmp_path / "bad.fvecs"
    with open(path, "wb") as f:
        f.write(struct.pack("<i", 2) + np.zeros(2, dtype="<f4").tobytes())
        f.write(struct.pack("<i", 3) + np.zeros(3, dtype="<f4").tobytes())
    with pytest.raises(DatasetParseError, match="offset 12"):
        load_dataset(str(path))


def test_truncated_payload_reports_offset(tmp_path):
    path = tmp_path / "short.fvecs"
    path.write_bytes(struct.pack("<i", 4) + b"\x00" * 8)
    with pytest.raises(DatasetParseError, match="offset"):
        load_dataset(str(path))


def test_fbin_header_mismatch(tmp_path):
    path = tmp_path / "bad.fbin"
    path.write_bytes(struct.pack("<ii", 3, 2) + b"\x00" * 4)
    with pytest.raises(DatasetParseError, match="offset 8"):
        load_dataset(str(path))


def test_unknown_extension(tmp_path):
    path = tmp_path / "data.csv"
    path.write_bytes(b"x")
    with pytest.raises(DatasetParseError):
        load_dataset(str(path))


@settings(max_examples=25, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 5),
    st.sampled_from(["fvecs", "fbin"]),
    st.integers(0, 2**16),
)
def test_float_roundtrip_bit_exact(tmp_path_factory, n, dim, fmt, seed):
    data = np.random.default_rng(seed).normal(size=(n, dim)).astype(np.float32)
    path = tmp_path_factory.mktemp("rt") / f"data.{fmt}"
    save_dataset(str(path), data)
    back = load_dataset(str(path))
    np.testing.assert_array_equal(back, data)


def test_bvecs_roundtrip(tmp_path):
    data = np.arange(12, dtype=np.uint8).reshape(3, 4)
    path = tmp_path / "data.bvecs"
    save_dataset(str(path), data)
    back = load_dataset(str(path))
    np.testing.assert_array_equal(back, data.astype(np.float32))


def test_ground_truth_roundtrip(tmp_path):
    truth = np.arange(12, dtype=np.int32).reshape(4, 3)
    path = tmp_path / "truth.bin"
    save_ground_truth(str(path), truth)
    back = load_ground_truth(str(path))
    np.testing.assert_array_equal(back, truth)


def test_ground_truth_truncation_detected(tmp_path):
    path = tmp_path / "truth.bin"
    path.write_bytes(struct.pack("<ii", 2, 3) + b"\x00" * 8)
    with pytest.raises(DatasetParseError, match="offset 8"):
        load_ground_truth(str(path))


def test_generate_clustered_shape_and_determinism():
    a = generate_clustered(250, 5, 50, 8, seed=9)
    b = generate_clustered(250, 5, 50, 8, seed=9)
    assert a.shape == (250, 8) and a.dtype == np.float32
    np.testing.assert_array_equal(a, b)
    c = generate_clustered(250, 5, 50, 8, seed=10)
    assert not np.array_equal(a, c)


def test_generate_clustered_is_cluster_contiguous():
    data = generate_clustered(200, 4, 50, 3, seed=1, spread=0.001)
    for c in range(4):
        block = data[c * 50:(c + 1) * 50]
        assert np.linalg.norm(block.std(axis=0)) < 0.01
