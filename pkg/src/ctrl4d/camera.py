"""Pinhole camera models, pose algebra, and projection primitives.

Extrinsics convention
---------------------
Poses are **world-to-camera**: ``x_cam = R @ x_world + t``. This is the one
convention under which back-projection,

    p = R.T @ (depth * K^-1 @ u - t),

is the exact inverse of projection, which every renderer and metric in this
package relies on. Pipelines that hand out camera-to-world matrices must be
inverted on import (``pose_inverse`` does this).

Pixel convention: ``u = (column, row, 1)`` homogeneous, pixel centers at
integer coordinates, origin at the top-left pixel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BehindCamera, BoundsError, DomainError, ShapeError

ORTHONORMAL_TOL = 1e-6


def _readonly(a: np.ndarray, shape: tuple, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if arr.shape != shape:
        raise ShapeError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    """Shared pinhole intrinsics for one image stream."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not (0 <= self.cx < self.width):
            raise ValueError(f"cx={self.cx} outside [0, {self.width})")
        if not (0 <= self.cy < self.height):
            raise ValueError(f"cy={self.cy} outside [0, {self.height})")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
        )


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: ``x_cam = rotation @ x_world + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _readonly(self.rotation, (3, 3)))
        object.__setattr__(self, "translation", _readonly(self.translation, (3,)))
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"rotation not orthonormal (max deviation {err:.2e})")
        det = np.linalg.det(self.rotation)
        if abs(det - 1.0) > ORTHONORMAL_TOL:
            raise ValueError(f"rotation determinant {det:.8f} != +1")

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))

    @classmethod
    def from_quaternion(cls, q: Sequence[float], t: Sequence[float]) -> "CameraPose":
        """Build a pose from a (w, x, y, z) quaternion; normalized internally."""
        w, x, y, z = (float(v) for v in q)
        n = np.sqrt(w * w + x * x + y * y + z * z)
        if n == 0:
            raise ValueError("zero quaternion")
        w, x, y, z = w / n, x / n, y / n, z / n
        R = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )
        return cls(R, np.asarray(t, dtype=np.float64))

    def to_dict(self) -> dict:
        return {"R": self.rotation.reshape(-1).tolist(), "t": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPose":
        t = np.asarray(d["t"], dtype=np.float64)
        if "R" in d:
            return cls(np.asarray(d["R"], dtype=np.float64).reshape(3, 3), t)
        if "q" in d:
            return cls.from_quaternion(d["q"], t)
        raise ValueError("pose dict needs 'R' (9 row-major) or 'q' (w,x,y,z)")


def pose_compose(a: CameraPose, b: CameraPose) -> CameraPose:
    """Transform applying ``b`` first, then ``a``: x -> a.R @ (b.R @ x + b.t) + a.t."""
    return CameraPose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def pose_inverse(p: CameraPose) -> CameraPose:
    return CameraPose(p.rotation.T, -p.rotation.T @ p.translation)


def camera_center(p: CameraPose) -> np.ndarray:
    """World-frame position of the camera's optical center."""
    return -p.rotation.T @ p.translation


@dataclass(frozen=True)
class CameraTrack:
    """One intrinsics shared across an ordered sequence of per-frame poses."""

    intrinsics: CameraIntrinsics
    poses: tuple

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if len(self.poses) < 1:
            raise ValueError("camera track needs at least one pose")
        for i, p in enumerate(self.poses):
            if not isinstance(p, CameraPose):
                raise TypeError(f"pose {i} is not a CameraPose")

    @property
    def frame_count(self) -> int:
        return len(self.poses)

    def pose_at(self, frame: int) -> CameraPose:
        """Pose for 1-based frame index."""
        if not 1 <= frame <= len(self.poses):
            raise BoundsError(f"frame {frame} outside [1, {len(self.poses)}]")
        return self.poses[frame - 1]

    def constant(self) -> "CameraTrack":
        """Same length, every pose replaced by the first frame's pose."""
        return CameraTrack(self.intrinsics, (self.poses[0],) * len(self.poses))


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel metric depth with an explicit validity grid."""

    values: np.ndarray
    validity: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype not in (np.float32, np.float64):
            values = values.astype(np.float64)
        validity = np.asarray(self.validity, dtype=bool)
        if values.ndim != 2 or values.shape != validity.shape:
            raise ShapeError(
                f"depth {values.shape} and validity {validity.shape} must be equal 2-D grids"
            )
        valid = values[validity]
        if valid.size and (not np.all(np.isfinite(valid)) or valid.min() <= 0):
            raise ValueError("every valid depth must be finite and > 0")
        if values.flags.writeable:
            values.setflags(write=False)
        validity.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "validity", validity)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "DepthMap":
        """Treat non-finite and non-positive entries as holes."""
        values = np.asarray(values, dtype=np.float64)
        validity = np.isfinite(values) & (values > 0)
        return cls(np.where(validity, values, 0.0), validity)

    @classmethod
    def _wrap(cls, values: np.ndarray, validity: np.ndarray) -> "DepthMap":
        """Internal: skip validation for grids that hold the invariant by construction."""
        obj = object.__new__(cls)
        if values.flags.writeable:
            values.setflags(write=False)
        if validity.flags.writeable:
            validity.setflags(write=False)
        object.__setattr__(obj, "values", values)
        object.__setattr__(obj, "validity", validity)
        return obj

    @property
    def shape(self) -> tuple:
        return self.values.shape


# ---------------------------------------------------------------------------
# Projection primitives


def back_project(u, depth: float, K: CameraIntrinsics, pose: CameraPose) -> np.ndarray:
    """Lift a pixel with known depth to a world point.

    ``u`` is (column, row) or homogeneous (column, row, 1). Raises DomainError
    for non-positive depth and BoundsError for pixels outside the image.
    """
    if depth <= 0:
        raise DomainError(f"depth must be > 0, got {depth}")
    col, row = float(u[0]), float(u[1])
    if not (0 <= col <= K.width - 1 and 0 <= row <= K.height - 1):
        raise BoundsError(
            f"pixel ({col}, {row}) outside [0, {K.width - 1}] x [0, {K.height - 1}]"
        )
    ray = np.array([(col - K.cx) / K.fx, (row - K.cy) / K.fy, 1.0])
    return pose.rotation.T @ (depth * ray - pose.translation)


def project(p, K: CameraIntrinsics, pose: CameraPose):
    """Project a world point; returns ((column, row), camera-space depth).

    Raises BehindCamera when the point has non-positive camera z.
    """
    pc = pose.rotation @ np.asarray(p, dtype=np.float64) + pose.translation
    z = pc[2]
    if z <= 0:
        raise BehindCamera(f"camera-space z = {z} <= 0")
    pix = np.array([K.fx * pc[0] / z + K.cx, K.fy * pc[1] / z + K.cy])
    return pix, float(z)


def back_project_pixels(
    cols: np.ndarray, rows: np.ndarray, depths: np.ndarray, K: CameraIntrinsics, pose: CameraPose
) -> np.ndarray:
    """Vectorized back-projection. Callers guarantee bounds and depth > 0."""
    x = (np.asarray(cols, dtype=np.float64) - K.cx) / K.fx
    y = (np.asarray(rows, dtype=np.float64) - K.cy) / K.fy
    d = np.asarray(depths, dtype=np.float64)
    cam = np.stack([x * d, y * d, d], axis=1)
    return (cam - pose.translation) @ pose.rotation


def project_points(points: np.ndarray, K: CameraIntrinsics, pose: CameraPose):
    """Vectorized projection of (N, 3) world points.

    Returns ((N, 2) pixels, (N,) camera-space z). No culling: entries with
    z <= 0 carry meaningless pixels and must be masked by the caller.
    """
    pts = np.asarray(points, dtype=np.float64)
    cam = pts @ pose.rotation.T + pose.translation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = K.fx * cam[:, 0] / z + K.cx
        v = K.fy * cam[:, 1] / z + K.cy
    return np.stack([u, v], axis=1), z


# ---------------------------------------------------------------------------
# JSON I/O: poses as [{"R": [9 row-major], "t": [3]}, ...]


def load_intrinsics(path) -> CameraIntrinsics:
    with open(path, "r", encoding="utf-8") as f:
        return CameraIntrinsics.from_dict(json.load(f))


def save_intrinsics(K: CameraIntrinsics, path) -> None:
    Path(path).write_text(json.dumps(K.to_dict(), indent=2), encoding="utf-8")


def load_poses(path) -> list:
    with open(path, "r", encoding="utf-8") as f:
        frames = json.load(f)
    if not isinstance(frames, list):
        raise ValueError(f"{path}: pose file must be a JSON array of frames")
    return [CameraPose.from_dict(d) for d in frames]


def save_poses(poses: Iterable[CameraPose], path) -> None:
    Path(path).write_text(
        json.dumps([p.to_dict() for p in poses], indent=2), encoding="utf-8"
    )
