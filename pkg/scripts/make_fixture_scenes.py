#!/usr/bin/env python3
"""Create small fixture scene directories for editor integration tests.

Usage: make_fixture_scenes.py OUT_DIR [COUNT]
"""

import sys
from pathlib import Path

import numpy as np

from ctrl4d.camera import CameraIntrinsics, CameraPose, CameraTrack, DepthMap
from ctrl4d.scene import InstanceMask, build_scene, save_scene


def make_scene(seed: int, frames: int = 4, width: int = 96, height: int = 64):
    rng = np.random.default_rng(seed)
    image = rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
    depth = 3.0 + rng.random((height, width)) * 4.0
    validity = rng.random((height, width)) > 0.03
    dm = DepthMap(np.where(validity, depth, 0.0), validity)
    masks = []
    for k in range(2):
        px = np.zeros((height, width), dtype=bool)
        y0 = 10 + 18 * k
        x0 = 16 + 30 * k
        px[y0 : y0 + 14, x0 : x0 + 10] = True
        px &= validity
        masks.append(InstanceMask(f"obj{k}", px, label="person" if k == 0 else "car"))
    K = CameraIntrinsics(fx=80.0, fy=80.0, cx=width / 2, cy=height / 2,
                         width=width, height=height)
    scene = build_scene(image, dm, masks, K, CameraPose.identity())
    poses = tuple(
        CameraPose(np.eye(3), np.array([0.01 * t, 0.0, 0.002 * t])) for t in range(frames)
    )
    return scene.with_camera(CameraTrack(K, poses))


def main():
    out = Path(sys.argv[1])
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 5
    out.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        scene_dir = out / f"scene{i}"
        save_scene(make_scene(seed=100 + i), scene_dir)
        print(scene_dir)


if __name__ == "__main__":
    main()
