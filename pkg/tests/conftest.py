from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ctrl4d.camera import CameraIntrinsics, CameraPose
from ctrl4d.camera import DepthMap
from ctrl4d.scene import InstanceMask, build_scene


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def identity_intrinsics(width: int = 8, height: int = 8) -> CameraIntrinsics:
    """fx = fy = 1, principal point at the origin pixel."""
    return CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=width, height=height)


def centered_intrinsics(width: int = 64, height: int = 48, f: float = 50.0) -> CameraIntrinsics:
    return CameraIntrinsics(fx=f, fy=f, cx=width / 2, cy=height / 2, width=width, height=height)


def make_scene(
    width: int = 8,
    height: int = 6,
    n_objects: int = 1,
    base_depth: float = 2.0,
    hole_pixels=(),
):
    """Small deterministic scene: planar depth, striped colors, square masks."""
    image = np.zeros((height, width, 3), dtype=np.uint8)
    image[..., 0] = np.linspace(0, 255, width, dtype=np.uint8)[None, :]
    image[..., 1] = np.linspace(0, 255, height, dtype=np.uint8)[:, None]
    image[..., 2] = 128

    depth_values = np.full((height, width), base_depth, dtype=np.float64)
    depth_values += np.arange(width)[None, :] * 0.05
    validity = np.ones((height, width), dtype=bool)
    for (y, x) in hole_pixels:
        validity[y, x] = False
    depth = DepthMap(np.where(validity, depth_values, 0.0), validity)

    masks = []
    for k in range(n_objects):
        pixels = np.zeros((height, width), dtype=bool)
        x0 = 1 + 2 * k
        pixels[1:3, x0 : x0 + 2] = True
        masks.append(InstanceMask(object_id=f"obj{k}", pixels=pixels, label="person"))

    K = centered_intrinsics(width, height, f=float(max(width, height)))
    pose = CameraPose.identity()
    return build_scene(image, depth, masks, K, pose), image, depth, masks, K, pose
