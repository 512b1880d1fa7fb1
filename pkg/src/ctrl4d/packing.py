"""Fold control masks into latent-grid-aligned tensors.

The mask's spatial grid is split into s_h x s_w sub-cells which fold into the
channel dimension (channel c = r * s_w + q maps to offset (row r, col q)
inside each cell), and the temporal axis is downsampled by nearest-neighbor
to T' = ceil(T / s_t). The spatial fold is an exact bijection; the temporal
step is lossy by design.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class StrideConfig:
    s_t: int = 4
    s_h: int = 8
    s_w: int = 8

    def __post_init__(self):
        if min(self.s_t, self.s_h, self.s_w) < 1:
            raise ValueError(f"strides must be positive, got {self}")

    @property
    def mask_channels(self) -> int:
        return self.s_h * self.s_w


DEFAULT_STRIDES = StrideConfig()


@dataclass(frozen=True)
class PackedMask:
    """(C_M, T', H', W') tensor with C_M = s_h * s_w."""

    tensor: np.ndarray
    strides: StrideConfig

    def __post_init__(self):
        t = np.asarray(self.tensor)
        if t.ndim != 4:
            raise ShapeError(f"packed mask must be 4-D, got shape {t.shape}")
        if t.shape[0] != self.strides.mask_channels:
            raise ShapeError(
                f"channel dim {t.shape[0]} != s_h*s_w = {self.strides.mask_channels}"
            )
        object.__setattr__(self, "tensor", t)

    @property
    def shape(self) -> tuple:
        return self.tensor.shape


def packed_frame_count(t: int, s_t: int) -> int:
    """T' = (T + s_t - 1) // s_t, i.e. ceil(T / s_t)."""
    return (t + s_t - 1) // s_t


def temporal_indices(t: int, t_packed: int) -> np.ndarray:
    """0-based kept source index per packed slice, endpoints pinned.

    tau(t') = min(round(t' * (T-1) / max(T'-1, 1)), T-1) with round-half-up,
    so the first frame (the all-zero special mask) and the last frame always
    survive downsampling.
    """
    tp = np.arange(t_packed, dtype=np.float64)
    pos = tp * (t - 1) / max(t_packed - 1, 1)
    return np.minimum(np.floor(pos + 0.5).astype(np.int64), t - 1)


def rearrange_mask(mask: np.ndarray, strides: StrideConfig = DEFAULT_STRIDES) -> PackedMask:
    """Fold a (1, T, H, W) mask into (s_h*s_w, T', H/s_h, W/s_w).

    out[c, t', i, j] = mask[0, tau(t'), i*s_h + r, j*s_w + q] with
    c = r*s_w + q (row-major within each cell).
    """
    m = np.asarray(mask)
    if m.ndim != 4 or m.shape[0] != 1:
        raise ShapeError(f"mask must be (1, T, H, W), got shape {m.shape}")
    _, t, h, w = m.shape
    if h % strides.s_h != 0 or w % strides.s_w != 0:
        raise ShapeError(
            f"H={h} and W={w} must divide by spatial strides "
            f"({strides.s_h}, {strides.s_w})"
        )
    tp = packed_frame_count(t, strides.s_t)
    kept = m[0, temporal_indices(t, tp)]  # (T', H, W)
    hp, wp = h // strides.s_h, w // strides.s_w
    cells = kept.reshape(tp, hp, strides.s_h, wp, strides.s_w)
    folded = cells.transpose(2, 4, 0, 1, 3).reshape(strides.mask_channels, tp, hp, wp)
    return PackedMask(np.ascontiguousarray(folded), strides)


def unpack_mask(packed: PackedMask) -> np.ndarray:
    """Invert the spatial fold exactly: (C, T', H', W') -> (1, T', H, W).

    The temporal downsample is lossy and not inverted; the output keeps T'
    slices at the original spatial resolution.
    """
    s = packed.strides
    c, tp, hp, wp = packed.tensor.shape
    cells = packed.tensor.reshape(s.s_h, s.s_w, tp, hp, wp)
    grid = cells.transpose(2, 3, 0, 4, 1).reshape(tp, hp * s.s_h, wp * s.s_w)
    return np.ascontiguousarray(grid[None])


def assemble_geometry_tensor(
    encoded_bg_rgb: np.ndarray,
    encoded_bg_depth: np.ndarray,
    encoded_traj_rgb: np.ndarray,
    encoded_traj_depth: np.ndarray,
    packed_mask: PackedMask,
) -> np.ndarray:
    """Channel-wise concatenation in the fixed order [bg_rgb, bg_depth,
    traj_rgb, traj_depth, mask]; no mixing."""
    parts = [
        np.asarray(encoded_bg_rgb),
        np.asarray(encoded_bg_depth),
        np.asarray(encoded_traj_rgb),
        np.asarray(encoded_traj_depth),
        packed_mask.tensor,
    ]
    base = parts[0].shape[1:]
    for i, p in enumerate(parts):
        if p.ndim != 4:
            raise ShapeError(f"input {i} must be 4-D, got shape {p.shape}")
        if p.shape[1:] != base:
            raise ShapeError(
                f"input {i} trailing dims {p.shape[1:]} != {base}"
            )
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Mask-directory ingestion for the CLI `pack` command.

_MASK_RE = re.compile(r"^mask_(\d{4})\.png$")


def load_mask_sequence(mask_dir) -> np.ndarray:
    """Read exported mask_%04d.png files into a (1, T, H, W) float array in [0, 1]."""
    from . import formats

    d = Path(mask_dir)
    found = {}
    for p in d.iterdir():
        m = _MASK_RE.match(p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise FileNotFoundError(f"no mask_%04d.png files in {d}")
    frames = sorted(found)
    if frames != list(range(1, len(frames) + 1)):
        raise ValueError(f"{d}: mask frames are not contiguous from 0001: {frames[:5]}...")
    grids = []
    for f in frames:
        arr = formats.read_png(found[f])
        if arr.ndim != 2:
            raise ShapeError(f"{found[f]}: mask PNG must be grayscale")
        grids.append(arr.astype(np.float64) / 255.0)
    return np.stack(grids)[None]
