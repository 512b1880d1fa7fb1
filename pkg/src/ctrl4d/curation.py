"""Dataset construction rules: clip extraction, quality filtering, manifests.

Clips come from shot-detected source videos; only shots strictly longer than
the model's clip length survive, center-cropped to exactly that length (or
randomly placed with an explicit seed). Filtering runs an object-centric rule
set over first-frame instance-mask statistics plus visual-quality scores, and
manifest assembly validates that every accepted clip carries the full set of
upstream annotations.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ManifestError
from .scene import InstanceMask

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Clip length in frames (the backbone's default temporal window).
CLIP_FRAMES = 81

# Rule identifiers reported in filter verdicts.
RULE_COUNT = "COUNT"
RULE_AREA = "AREA"
RULE_HUMAN_BORDER = "HUMAN_BORDER"
RULE_HUMAN_ASPECT = "HUMAN_ASPECT"
RULE_QUALITY = "QUALITY"


def extract_clip(
    shot_len: int,
    policy: str = "center",
    rng: Optional[np.random.Generator] = None,
) -> Optional[tuple]:
    """Pick an 81-frame span (inclusive 0-based start/end) inside a shot.

    Shots must be strictly longer than 81 frames; shorter or equal-length
    shots are rejected (returns None). The default deterministic policy
    centers the span; ``policy='random'`` draws the start uniformly and
    requires an explicit generator for reproducible manifests.
    """
    if shot_len < 1:
        raise ValueError(f"shot length must be >= 1, got {shot_len}")
    if shot_len <= CLIP_FRAMES:
        return None
    if policy == "center":
        start = (shot_len - CLIP_FRAMES) // 2
    elif policy == "random":
        if rng is None:
            raise ValueError("random sampling requires an explicit rng")
        start = int(rng.integers(0, shot_len - CLIP_FRAMES + 1))
    else:
        raise ValueError(f"unknown sampling policy {policy!r}")
    return (start, start + CLIP_FRAMES - 1)


@dataclass(frozen=True)
class ObjectMaskStats:
    """First-frame mask statistics for one instance."""

    label: str
    area_fraction: float
    bbox: tuple  # (x0, y0, x1, y1) inclusive pixel bounds
    aspect_ratio: float  # bbox height / width
    touches_border: bool

    def __post_init__(self):
        if not 0.0 <= self.area_fraction <= 1.0:
            raise ValueError(f"area fraction {self.area_fraction} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "area_fraction": self.area_fraction,
            "bbox": list(self.bbox),
            "aspect_ratio": self.aspect_ratio,
            "touches_border": self.touches_border,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectMaskStats":
        return cls(
            label=str(d["label"]),
            area_fraction=float(d["area_fraction"]),
            bbox=tuple(d["bbox"]),
            aspect_ratio=float(d["aspect_ratio"]),
            touches_border=bool(d["touches_border"]),
        )


def compute_mask_stats(mask: InstanceMask) -> ObjectMaskStats:
    """Derive filter statistics from an instance mask.

    "Touches border" means any mask pixel in the outermost 1-pixel ring;
    aspect ratio is bounding-box height over width.
    """
    px = mask.pixels
    h, w = px.shape
    rows, cols = np.nonzero(px)
    y0, y1 = int(rows.min()), int(rows.max())
    x0, x1 = int(cols.min()), int(cols.max())
    touches = bool(
        px[0, :].any() or px[-1, :].any() or px[:, 0].any() or px[:, -1].any()
    )
    return ObjectMaskStats(
        label=mask.label,
        area_fraction=float(px.sum()) / (h * w),
        bbox=(x0, y0, x1, y1),
        aspect_ratio=(y1 - y0 + 1) / (x1 - x0 + 1),
        touches_border=touches,
    )


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    source_id: str
    shot_span: tuple  # (start, end) inclusive
    sampled_span: tuple  # (start, end) inclusive, exactly CLIP_FRAMES long
    objects: tuple  # ObjectMaskStats per first-frame instance
    aesthetic_score: float
    luminance_score: float  # mean luma in [0, 1]

    def __post_init__(self):
        s0, s1 = self.shot_span
        c0, c1 = self.sampled_span
        if c1 - c0 + 1 != CLIP_FRAMES:
            raise ValueError(
                f"sampled span {self.sampled_span} is not {CLIP_FRAMES} frames"
            )
        if not (s0 <= c0 and c1 <= s1):
            raise ValueError(f"sampled span {self.sampled_span} outside shot {self.shot_span}")
        object.__setattr__(self, "objects", tuple(self.objects))

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "source_id": self.source_id,
            "shot_span": list(self.shot_span),
            "sampled_span": list(self.sampled_span),
            "objects": [o.to_dict() for o in self.objects],
            "aesthetic_score": self.aesthetic_score,
            "luminance_score": self.luminance_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipRecord":
        return cls(
            clip_id=str(d["clip_id"]),
            source_id=str(d["source_id"]),
            shot_span=tuple(d["shot_span"]),
            sampled_span=tuple(d["sampled_span"]),
            objects=tuple(ObjectMaskStats.from_dict(o) for o in d["objects"]),
            aesthetic_score=float(d["aesthetic_score"]),
            luminance_score=float(d["luminance_score"]),
        )


@dataclass(frozen=True)
class FilterThresholds:
    """Filtering rule parameters.

    Object count, area, border, and aspect bounds follow the published rule
    set; the aesthetic and luminance defaults are this repo's choices (the
    rules were stated without numbers) and should be tuned per corpus.
    """

    min_objects: int = 1
    max_objects: int = 6
    max_area_fraction: float = 0.20
    human_aspect_min: float = 2.0
    human_aspect_max: float = 4.0
    min_aesthetic: float = 4.5
    luma_min: float = 20.0 / 255.0
    luma_max: float = 235.0 / 255.0
    human_labels: tuple = ("person", "human")
    controllable_labels: tuple = ("person", "human", "car", "animal")

    @classmethod
    def from_toml(cls, path) -> "FilterThresholds":
        with open(path, "rb") as f:
            doc = tomllib.load(f)
        section = doc.get("filters", doc)
        kwargs = {}
        for name in (
            "min_objects",
            "max_objects",
            "max_area_fraction",
            "human_aspect_min",
            "human_aspect_max",
            "min_aesthetic",
            "luma_min",
            "luma_max",
        ):
            if name in section:
                kwargs[name] = section[name]
        for name in ("human_labels", "controllable_labels"):
            if name in section:
                kwargs[name] = tuple(section[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reasons: tuple  # sorted rule identifiers

    def __post_init__(self):
        object.__setattr__(self, "reasons", tuple(self.reasons))
        if self.accepted != (len(self.reasons) == 0):
            raise ValueError("accepted must equal 'no reasons fired'")

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "reasons": list(self.reasons)}


def filter_clip(
    rec: ClipRecord, thresholds: FilterThresholds = FilterThresholds()
) -> FilterVerdict:
    """Apply every rule; deterministic and order-independent, reasons sorted.

    COUNT: object count outside [min, max]. AREA: any mask covers strictly
    more than the area bound. HUMAN_BORDER: a human mask touches the image
    border. HUMAN_ASPECT: a human bbox aspect outside [min, max] (bounds
    inclusive on the accepting side). QUALITY: aesthetic below threshold or
    mean luma outside its band.
    """
    reasons = set()
    count = len(rec.objects)
    if not thresholds.min_objects <= count <= thresholds.max_objects:
        reasons.add(RULE_COUNT)
    humans = [o for o in rec.objects if o.label in thresholds.human_labels]
    if any(o.area_fraction > thresholds.max_area_fraction for o in rec.objects):
        reasons.add(RULE_AREA)
    if any(o.touches_border for o in humans):
        reasons.add(RULE_HUMAN_BORDER)
    if any(
        not thresholds.human_aspect_min <= o.aspect_ratio <= thresholds.human_aspect_max
        for o in humans
    ):
        reasons.add(RULE_HUMAN_ASPECT)
    if rec.aesthetic_score < thresholds.min_aesthetic or not (
        thresholds.luma_min <= rec.luminance_score <= thresholds.luma_max
    ):
        reasons.add(RULE_QUALITY)
    return FilterVerdict(accepted=not reasons, reasons=tuple(sorted(reasons)))


# ---------------------------------------------------------------------------
# Manifest assembly.
#
# Annotations follow the directory convention
#   <clip>/depth/*.pfm  <clip>/masks/*.png  <clip>/poses.json  <clip>/caption.txt
# produced by an annotation provider (upstream perception models run outside
# this package; a synthetic provider ships for tests).


@dataclass(frozen=True)
class AnnotatedClip:
    record: ClipRecord
    caption_path: Optional[Path]
    poses_path: Optional[Path]
    depth_dir: Optional[Path]
    masks_dir: Optional[Path]
    trajectory_paths: dict = field(default_factory=dict)  # object_id -> path
    control_dir: Optional[Path] = None
    scene_type: str = "dynamic"  # "dynamic" | "static"
    split: str = "train"


def _require_file(clip_id: str, name: str, path: Optional[Path]) -> Path:
    if path is None or not Path(path).is_file():
        raise ManifestError(clip_id, name)
    return Path(path)


def _require_dir(clip_id: str, name: str, path: Optional[Path], pattern: str) -> Path:
    if path is None or not Path(path).is_dir() or not any(Path(path).glob(pattern)):
        raise ManifestError(clip_id, name)
    return Path(path)


def assemble_manifest(clips: Sequence[AnnotatedClip]) -> dict:
    """Build the dataset manifest, validating annotation completeness.

    Every clip must carry a caption, camera poses, a depth directory with at
    least one PFM, and a masks directory with at least one PNG; the first
    missing field raises ManifestError naming the clip and field. Statistics
    count clips by split, source, and scene type so dataset builds are
    reproducible.
    """
    entries = []
    stats: dict = {"total": 0, "by_split": {}, "by_source": {}, "by_scene_type": {}}
    for clip in clips:
        cid = clip.record.clip_id
        caption = _require_file(cid, "caption", clip.caption_path)
        poses = _require_file(cid, "poses", clip.poses_path)
        depth = _require_dir(cid, "depth", clip.depth_dir, "*.pfm")
        masks = _require_dir(cid, "masks", clip.masks_dir, "*.png")
        entries.append(
            {
                "clip_id": cid,
                "source_id": clip.record.source_id,
                "caption": caption.read_text(encoding="utf-8").strip(),
                "poses": str(poses),
                "depth_dir": str(depth),
                "masks_dir": str(masks),
                "trajectories": {k: str(v) for k, v in clip.trajectory_paths.items()},
                "control_dir": str(clip.control_dir) if clip.control_dir else None,
                "scene_type": clip.scene_type,
                "split": clip.split,
                "sampled_span": list(clip.record.sampled_span),
            }
        )
        stats["total"] += 1
        for key, value in (
            ("by_split", clip.split),
            ("by_source", clip.record.source_id),
            ("by_scene_type", f"{clip.split}/{clip.scene_type}"),
        ):
            stats[key][value] = stats[key].get(value, 0) + 1
    return {"format": "ctrl4d-manifest", "version": 1, "clips": entries, "statistics": stats}


def save_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_records(path) -> list:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [ClipRecord.from_dict(d) for d in doc]


def save_records(records: Sequence[ClipRecord], path) -> None:
    Path(path).write_text(
        json.dumps([r.to_dict() for r in records], indent=2), encoding="utf-8"
    )
