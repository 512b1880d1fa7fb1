"""Annotation providers: where per-clip upstream annotations come from.

Real deployments run external perception models (depth, instance masks,
camera tracking, captioning) and drop their outputs into the directory
convention consumed here. This package never runs those models; it only
reads their outputs. The synthetic provider fabricates deterministic
annotations with the same layout for tests and fixtures.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from . import formats
from .camera import CameraPose, save_poses


@dataclass(frozen=True)
class AnnotationPaths:
    caption_path: Path
    poses_path: Path
    depth_dir: Path
    masks_dir: Path


class AnnotationProvider(Protocol):
    def annotate(self, clip_id: str, out_dir: Path) -> AnnotationPaths:
        """Produce (or locate) annotations for a clip under out_dir."""
        ...


class DirectoryAnnotationProvider:
    """Annotations already on disk under <root>/<clip_id>/ in the standard layout."""

    def __init__(self, root):
        self.root = Path(root)

    def annotate(self, clip_id: str, out_dir: Path | None = None) -> AnnotationPaths:
        base = self.root / clip_id
        return AnnotationPaths(
            caption_path=base / "caption.txt",
            poses_path=base / "poses.json",
            depth_dir=base / "depth",
            masks_dir=base / "masks",
        )


class SyntheticAnnotationProvider:
    """Deterministic fabricated annotations for tests.

    Depth is a tilted plane with a few holes, masks contain one rectangular
    instance per object, poses drift along x, and the caption names the clip.
    Content depends only on (seed, clip_id).
    """

    def __init__(self, seed: int = 0, frames: int = 3, height: int = 32, width: int = 48,
                 objects: int = 1):
        self.seed = seed
        self.frames = frames
        self.height = height
        self.width = width
        self.objects = objects

    def _rng(self, clip_id: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.seed}:{clip_id}".encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "big"))

    def annotate(self, clip_id: str, out_dir: Path) -> AnnotationPaths:
        base = Path(out_dir) / clip_id
        depth_dir = base / "depth"
        masks_dir = base / "masks"
        depth_dir.mkdir(parents=True, exist_ok=True)
        masks_dir.mkdir(parents=True, exist_ok=True)
        rng = self._rng(clip_id)
        h, w = self.height, self.width

        base_depth = 3.0 + rng.uniform(0, 2)
        for f in range(1, self.frames + 1):
            rows = np.linspace(0, 1, h)[:, None]
            depth = base_depth + rows * 2.0 + 0.05 * np.sin(np.arange(w) / 3.0)[None, :]
            holes = rng.random((h, w)) < 0.02
            depth = np.where(holes, np.inf, depth)
            formats.write_pfm(depth_dir / f"depth_{f:04d}.pfm", depth.astype(np.float32))

            ids = np.zeros((h, w), dtype=np.uint8)
            for k in range(self.objects):
                y0 = int(rng.integers(2, max(3, h // 2)))
                x0 = int(rng.integers(2, max(3, w // 2)))
                ids[y0 : y0 + h // 4, x0 : x0 + w // 6] = k + 1
            formats.write_png(masks_dir / f"mask_{f:04d}.png", ids)

        poses = [
            CameraPose(np.eye(3), np.array([0.05 * f, 0.0, 0.0]))
            for f in range(self.frames)
        ]
        save_poses(poses, base / "poses.json")
        (base / "caption.txt").write_text(
            f"synthetic clip {clip_id}", encoding="utf-8"
        )
        return AnnotationPaths(
            caption_path=base / "caption.txt",
            poses_path=base / "poses.json",
            depth_dir=depth_dir,
            masks_dir=masks_dir,
        )
