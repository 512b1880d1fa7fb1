"""World scene state: a static background cloud plus per-object Gaussian tracks.

``build_scene`` lifts the first frame's pixels through its depth map into a
shared world frame and partitions them by instance mask: every pixel with
valid depth lands in exactly one per-object cloud or in the background cloud.
Pixels whose depth is a hole are excluded entirely (back-projection is
undefined there).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import formats
from .camera import (
    CameraIntrinsics,
    CameraPose,
    CameraTrack,
    DepthMap,
    back_project_pixels,
)
from .errors import BoundsError, EmptyObjectError, ShapeError
from .gaussians import (
    GaussianTrajectory,
    KeyframeTrack,
    color_for_object,
    fit_gaussian,
    interpolate_track,
    keyframes_from_json,
    keyframes_to_json,
)
from .raster import DEFAULT_SPLAT_RADIUS, splat_points

SCENE_JSON = "scene.json"
BACKGROUND_PLY = "background.ply"
FIRST_FRAME_PNG = "first_frame.png"


@dataclass(frozen=True)
class ColoredPointCloud:
    points: np.ndarray  # (N, 3) world meters
    colors: np.ndarray  # (N, 3) in [0, 1]

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        # float32 is render currency; colors quantize to 8 bits on export anyway
        colors = np.asarray(self.colors, dtype=np.float32).reshape(-1, 3)
        if points.shape[0] != colors.shape[0]:
            raise ShapeError(f"{points.shape[0]} points vs {colors.shape[0]} colors")
        if not np.all(np.isfinite(points)):
            raise ValueError("point coordinates must be finite")
        points.setflags(write=False)
        colors.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "colors", colors)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class InstanceMask:
    object_id: str
    pixels: np.ndarray  # (H, W) bool
    label: str = ""

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=bool)
        if pixels.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {pixels.shape}")
        if not pixels.any():
            raise ValueError(f"mask {self.object_id!r} has no true pixel")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def area(self) -> int:
        return int(self.pixels.sum())


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    cloud: ColoredPointCloud
    keyframes: KeyframeTrack
    trajectory: GaussianTrajectory
    label: str = ""

    @property
    def color(self) -> np.ndarray:
        return self.trajectory.color


@dataclass(frozen=True)
class SceneState:
    """Immutable world state; edits return new states via ``with_*`` methods."""

    background: ColoredPointCloud
    objects: tuple
    camera: CameraTrack
    first_frame_image: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        objects = tuple(self.objects)
        img = np.asarray(self.first_frame_image, dtype=np.uint8)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ShapeError(f"first frame image must be (H, W, 3), got {img.shape}")
        if img.shape[:2] != (self.camera.intrinsics.height, self.camera.intrinsics.width):
            raise ShapeError(
                f"first frame {img.shape[:2]} does not match intrinsics "
                f"({self.camera.intrinsics.height}, {self.camera.intrinsics.width})"
            )
        t = self.camera.frame_count
        ids = set()
        for obj in objects:
            if obj.trajectory.frame_count != t:
                raise ShapeError(
                    f"object {obj.object_id!r} trajectory has {obj.trajectory.frame_count} "
                    f"frames, camera has {t}"
                )
            if obj.object_id in ids:
                raise ValueError(f"duplicate object id {obj.object_id!r}")
            ids.add(obj.object_id)
        img.setflags(write=False)
        object.__setattr__(self, "objects", objects)
        object.__setattr__(self, "first_frame_image", img)

    @property
    def frame_count(self) -> int:
        return self.camera.frame_count

    def object_map(self) -> dict:
        return {o.object_id: o for o in self.objects}

    def get_object(self, object_id: str) -> SceneObject:
        for o in self.objects:
            if o.object_id == object_id:
                return o
        raise KeyError(object_id)

    def with_camera(self, track: CameraTrack) -> "SceneState":
        """Replace the camera track; trajectories re-interpolate to its length."""
        objs = tuple(
            replace(
                o,
                trajectory=interpolate_track(
                    o.keyframes, track.frame_count, o.object_id, o.trajectory.color
                ),
            )
            for o in self.objects
        )
        return SceneState(self.background, objs, track, self.first_frame_image)

    def with_keyframes(
        self, object_id: str, keyframes: KeyframeTrack, color=None
    ) -> "SceneState":
        """Replace one object's keyframe track and re-interpolate it."""
        found = False
        objs = []
        for o in self.objects:
            if o.object_id != object_id:
                objs.append(o)
                continue
            found = True
            c = o.trajectory.color if color is None else color
            traj = interpolate_track(keyframes, self.frame_count, object_id, c)
            objs.append(replace(o, keyframes=keyframes, trajectory=traj))
        if not found:
            raise KeyError(object_id)
        return SceneState(self.background, tuple(objs), self.camera, self.first_frame_image)


def build_scene(
    image: np.ndarray,
    depth: DepthMap,
    masks: list,
    K: CameraIntrinsics,
    pose1: CameraPose,
) -> SceneState:
    """Lift the annotated first frame into a world scene state.

    Overlapping masks are resolved in favor of the smaller-area mask (small
    objects occluding large ones is the common case); ties keep the earlier
    mask in the input order. Each object's initial Gaussian is fitted to its
    cloud and stored as a single keyframe at frame 1.
    """
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise ValueError(f"image must be uint8, got {img.dtype}")
    h, w = depth.shape
    if img.shape != (h, w, 3):
        raise ShapeError(f"image {img.shape} vs depth {(h, w)}")
    if (h, w) != (K.height, K.width):
        raise ShapeError(f"depth {(h, w)} vs intrinsics ({K.height}, {K.width})")
    for m in masks:
        if m.pixels.shape != (h, w):
            raise ShapeError(f"mask {m.object_id!r} {m.pixels.shape} vs image {(h, w)}")

    # Contested pixels go to the smaller mask: paint big-to-small so smaller
    # masks overwrite; equal areas paint later-input first so earlier wins.
    claim = np.full((h, w), -1, dtype=np.int64)
    for i, _ in sorted(enumerate(masks), key=lambda e: (-e[1].area, -e[0])):
        claim[masks[i].pixels] = i

    valid = depth.validity
    rows, cols = np.nonzero(valid)
    depths = depth.values[rows, cols]
    world = back_project_pixels(cols, rows, depths, K, pose1)
    rgb = img[rows, cols].astype(np.float64) / 255.0
    owner = claim[rows, cols]

    objects = []
    for i, m in enumerate(masks):
        sel = owner == i
        if not sel.any():
            raise EmptyObjectError(
                f"mask {m.object_id!r} covers no pixel with valid depth"
            )
        cloud = ColoredPointCloud(world[sel], rgb[sel])
        g = fit_gaussian(cloud.points)
        keys = KeyframeTrack(((1, g),))
        color = color_for_object(m.object_id)
        traj = interpolate_track(keys, 1, m.object_id, color)
        objects.append(
            SceneObject(m.object_id, cloud, keys, traj, label=m.label)
        )

    bg_sel = owner == -1
    background = ColoredPointCloud(world[bg_sel], rgb[bg_sel])
    camera = CameraTrack(K, (pose1,))
    return SceneState(background, tuple(objects), camera, img)


def render_background_points(
    scene: SceneState, frame: int, radius: float = DEFAULT_SPLAT_RADIUS
):
    """Z-buffered splat of the background cloud under the frame's pose.

    Returns (rgb float32 (H, W, 3), DepthMap); the DepthMap's validity grid is
    the background-visibility input to control-mask construction.
    """
    if not 1 <= frame <= scene.frame_count:
        raise BoundsError(f"frame {frame} outside [1, {scene.frame_count}]")
    return splat_points(
        scene.background.points,
        scene.background.colors,
        scene.camera.intrinsics,
        scene.camera.pose_at(frame),
        radius=radius,
    )


# ---------------------------------------------------------------------------
# Scene directory: scene.json + background.ply + object_<id>.ply + first_frame.png


def save_scene(scene: SceneState, dirpath) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    formats.write_ply(d / BACKGROUND_PLY, scene.background.points, scene.background.colors)
    formats.write_png(d / FIRST_FRAME_PNG, scene.first_frame_image)
    objs = []
    for o in scene.objects:
        ply = f"object_{o.object_id}.ply"
        formats.write_ply(d / ply, o.cloud.points, o.cloud.colors)
        entry = keyframes_to_json(o.object_id, o.color, o.keyframes)
        entry.update({"label": o.label, "cloud": ply})
        objs.append(entry)
    doc = {
        "format": "ctrl4d-scene",
        "version": 1,
        "frame_count": scene.frame_count,
        "intrinsics": scene.camera.intrinsics.to_dict(),
        "poses": [p.to_dict() for p in scene.camera.poses],
        "background": BACKGROUND_PLY,
        "first_frame": FIRST_FRAME_PNG,
        "objects": objs,
    }
    (d / SCENE_JSON).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def load_scene(dirpath) -> SceneState:
    d = Path(dirpath)
    doc = json.loads((d / SCENE_JSON).read_text(encoding="utf-8"))
    if doc.get("format") != "ctrl4d-scene":
        raise ValueError(f"{d / SCENE_JSON}: not a scene document")
    K = CameraIntrinsics.from_dict(doc["intrinsics"])
    poses = tuple(CameraPose.from_dict(p) for p in doc["poses"])
    camera = CameraTrack(K, poses)
    t = int(doc["frame_count"])
    if t != len(poses):
        raise ShapeError(f"frame_count {t} vs {len(poses)} poses")
    bg_pts, bg_cols = formats.read_ply(d / doc["background"])
    image = formats.read_png(d / doc["first_frame"])
    objects = []
    for entry in doc["objects"]:
        oid, color, keys = keyframes_from_json(entry)
        pts, cols = formats.read_ply(d / entry["cloud"])
        traj = interpolate_track(keys, t, oid, color)
        objects.append(
            SceneObject(
                oid,
                ColoredPointCloud(pts, cols),
                keys,
                traj,
                label=entry.get("label", ""),
            )
        )
    return SceneState(ColoredPointCloud(bg_pts, bg_cols), tuple(objects), camera, image)
