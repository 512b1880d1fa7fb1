"""File formats: binary PLY point clouds, PFM depth maps, PNG images, .gt4d tensors.

All writers are deterministic for identical input so exported sequences can be
compared byte-for-byte in tests.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ShapeError

# ---------------------------------------------------------------------------
# PNG (8-bit, via Pillow with fixed settings)


def write_png(path, array: np.ndarray) -> None:
    """Write an (H, W) grayscale or (H, W, 3) RGB uint8 array."""
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise ValueError(f"write_png expects uint8, got {arr.dtype}")
    if arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    else:
        raise ShapeError(f"unsupported PNG shape {arr.shape}")
    img.save(Path(path), format="PNG", optimize=False)


def read_png(path) -> np.ndarray:
    with Image.open(Path(path)) as img:
        if img.mode in ("L", "I;16", "I"):
            return np.asarray(img.convert("I")).astype(np.int64) if img.mode != "L" else np.asarray(img)
        return np.asarray(img.convert("RGB"))


def quantize_unit(x: np.ndarray) -> np.ndarray:
    """[0,1] floats -> uint8 by round(255 * x)."""
    return np.rint(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


# ---------------------------------------------------------------------------
# PFM (grayscale 'Pf', little-endian float32, rows stored bottom-to-top)


def write_pfm(path, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ShapeError(f"PFM writer expects a 2-D grid, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM (tag {tag!r})")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        data = np.frombuffer(f.read(w * h * 4), dtype="<f4" if scale < 0 else ">f4")
    return np.flipud(data.reshape(h, w)).copy()


# ---------------------------------------------------------------------------
# PLY (binary little-endian, xyz float32 + rgb uint8)

_PLY_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("red", "u1"), ("green", "u1"), ("blue", "u1")]
)


def write_ply(path, points: np.ndarray, colors: np.ndarray) -> None:
    """Write world points (N,3) with colors (N,3) in [0,1]."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cols = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] != cols.shape[0]:
        raise ShapeError(f"{pts.shape[0]} points vs {cols.shape[0]} colors")
    rec = np.empty(pts.shape[0], dtype=_PLY_DTYPE)
    rec["x"], rec["y"], rec["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
    rgb = np.rint(np.clip(cols, 0.0, 1.0) * 255.0).astype(np.uint8)
    rec["red"], rec["green"], rec["blue"] = rgb[:, 0], rgb[:, 1], rgb[:, 2]
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {pts.shape[0]}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(rec.tobytes())


def read_ply(path):
    """Read a PLY written by write_ply. Returns (points (N,3) f64, colors (N,3) f64)."""
    with open(path, "rb") as f:
        if f.readline().strip() != b"ply":
            raise ValueError(f"{path}: not a PLY file")
        n = None
        while True:
            line = f.readline()
            if not line:
                raise ValueError(f"{path}: truncated PLY header")
            if line.startswith(b"element vertex"):
                n = int(line.split()[-1])
            if line.strip() == b"end_header":
                break
        if n is None:
            raise ValueError(f"{path}: no vertex element")
        rec = np.frombuffer(f.read(n * _PLY_DTYPE.itemsize), dtype=_PLY_DTYPE)
    pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    cols = np.stack([rec["red"], rec["green"], rec["blue"]], axis=1).astype(np.float64) / 255.0
    return pts, cols


# ---------------------------------------------------------------------------
# .gt4d: flat little-endian float32 tensor with a 32-byte header.
#
# Header layout (little-endian):
#   bytes  0-3   magic b"GT4D"
#   bytes  4-7   uint32 dtype code (1 = float32)
#   bytes  8-23  uint32 x 4 dims (C, T, H, W)
#   bytes 24-31  reserved, zero

_GT4D_MAGIC = b"GT4D"
_GT4D_HEADER = struct.Struct("<4sI4I8x")
_GT4D_FLOAT32 = 1


def write_gt4d(path, tensor: np.ndarray) -> None:
    arr = np.ascontiguousarray(tensor, dtype=np.float32)
    if arr.ndim != 4:
        raise ShapeError(f"gt4d tensors are 4-D (C, T, H, W), got shape {arr.shape}")
    with open(path, "wb") as f:
        f.write(_GT4D_HEADER.pack(_GT4D_MAGIC, _GT4D_FLOAT32, *arr.shape))
        f.write(arr.tobytes())


def read_gt4d(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_GT4D_HEADER.size)
        magic, dtype_code, c, t, h, w = _GT4D_HEADER.unpack(header)
        if magic != _GT4D_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if dtype_code != _GT4D_FLOAT32:
            raise ValueError(f"{path}: unsupported dtype code {dtype_code}")
        data = np.frombuffer(f.read(c * t * h * w * 4), dtype="<f4")
    return data.reshape(c, t, h, w).copy()


def read_gt4d_header(path):
    """Dims (C, T, H, W) without loading the payload."""
    with open(path, "rb") as f:
        magic, dtype_code, c, t, h, w = _GT4D_HEADER.unpack(f.read(_GT4D_HEADER.size))
    if magic != _GT4D_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    return c, t, h, w
