"""File format round trips."""

from __future__ import annotations

import numpy as np
import pytest

from ctrl4d.errors import ShapeError
from ctrl4d.formats import (
    quantize_unit,
    read_pfm,
    read_ply,
    read_png,
    write_pfm,
    write_ply,
    write_png,
)


class TestPng:
    def test_rgb_roundtrip(self, rng, tmp_path):
        arr = rng.integers(0, 256, (12, 20, 3), dtype=np.uint8)
        write_png(tmp_path / "a.png", arr)
        np.testing.assert_array_equal(read_png(tmp_path / "a.png"), arr)

    def test_gray_roundtrip(self, rng, tmp_path):
        arr = rng.integers(0, 256, (12, 20), dtype=np.uint8)
        write_png(tmp_path / "a.png", arr)
        np.testing.assert_array_equal(read_png(tmp_path / "a.png"), arr)

    def test_deterministic_bytes(self, rng, tmp_path):
        arr = rng.integers(0, 256, (12, 20, 3), dtype=np.uint8)
        write_png(tmp_path / "a.png", arr)
        write_png(tmp_path / "b.png", arr)
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_dtype_guard(self, tmp_path):
        with pytest.raises(ValueError):
            write_png(tmp_path / "a.png", np.zeros((2, 2), dtype=np.float32))

    def test_quantize_unit(self):
        assert quantize_unit(np.array([0.0, 0.5, 1.0, 2.0])).tolist() == [0, 128, 255, 255]
        v = np.arange(256, dtype=np.uint8)
        np.testing.assert_array_equal(quantize_unit(v / 255.0), v)


class TestPfm:
    def test_roundtrip(self, rng, tmp_path):
        arr = rng.random((7, 9)).astype(np.float32) * 10
        write_pfm(tmp_path / "a.pfm", arr)
        np.testing.assert_array_equal(read_pfm(tmp_path / "a.pfm"), arr)

    def test_inf_preserved(self, tmp_path):
        arr = np.array([[1.0, np.inf], [2.0, 3.0]], dtype=np.float32)
        write_pfm(tmp_path / "a.pfm", arr)
        back = read_pfm(tmp_path / "a.pfm")
        assert np.isinf(back[0, 1])
        np.testing.assert_array_equal(back[np.isfinite(back)], arr[np.isfinite(arr)])

    def test_header_is_little_endian(self, tmp_path):
        write_pfm(tmp_path / "a.pfm", np.zeros((2, 3), dtype=np.float32))
        raw = (tmp_path / "a.pfm").read_bytes()
        assert raw.startswith(b"Pf\n3 2\n-1.0\n")

    def test_rejects_3d(self, tmp_path):
        with pytest.raises(ShapeError):
            write_pfm(tmp_path / "a.pfm", np.zeros((2, 2, 3), dtype=np.float32))


class TestPly:
    def test_roundtrip(self, rng, tmp_path):
        pts = rng.normal(size=(40, 3)).astype(np.float32).astype(np.float64)
        cols = np.round(rng.random((40, 3)) * 255) / 255.0
        write_ply(tmp_path / "a.ply", pts, cols)
        rp, rc = read_ply(tmp_path / "a.ply")
        np.testing.assert_allclose(rp, pts, atol=1e-6)
        np.testing.assert_allclose(rc, cols, atol=1e-9)

    def test_header(self, tmp_path):
        write_ply(tmp_path / "a.ply", np.zeros((2, 3)), np.zeros((2, 3)))
        raw = (tmp_path / "a.ply").read_bytes()
        assert raw.startswith(b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n")
        assert raw.index(b"end_header\n") > 0
        # 15 bytes per vertex after the header
        header_end = raw.index(b"end_header\n") + len(b"end_header\n")
        assert len(raw) - header_end == 2 * 15

    def test_length_mismatch(self, tmp_path):
        with pytest.raises(ShapeError):
            write_ply(tmp_path / "a.ply", np.zeros((2, 3)), np.zeros((3, 3)))

    def test_empty_cloud(self, tmp_path):
        write_ply(tmp_path / "a.ply", np.zeros((0, 3)), np.zeros((0, 3)))
        pts, cols = read_ply(tmp_path / "a.ply")
        assert pts.shape == (0, 3) and cols.shape == (0, 3)
