"""Render the scene state into per-frame conditioning maps.

Five maps per frame: background RGB/depth from the static cloud, trajectory
RGB/depth from the per-object Gaussians, and a soft control mask marking where
a downstream generator should synthesize or overwrite content.

Channels are decoupled by construction: background maps are a function of
(background cloud, camera) only, trajectory maps of (trajectories, camera)
only. Frame 1 is special-cased: its background RGB is the input image and its
mask is identically zero, so the first frame is preserved.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from numba import njit
from PIL import Image

from . import formats
from .camera import DepthMap
from .errors import ShapeError
from .gaussians import DEFAULT_ISO_SCALE
from .raster import (
    DEFAULT_SPLAT_RADIUS,
    FOOTPRINT_CUTOFF_SIGMA,
    gaussian_footprints,
    splat_points,
    warmup_kernels,
)
from .scene import SceneState


class RenderMode(Enum):
    CAMERA_ONLY = "camera-only"
    OBJECT_ONLY = "object-only"
    JOINT = "joint"

    @classmethod
    def parse(cls, s: str) -> "RenderMode":
        for m in cls:
            if m.value == s:
                return m
        raise ValueError(f"unknown render mode {s!r} (expected one of "
                         f"{[m.value for m in cls]})")


@dataclass(frozen=True)
class RenderSettings:
    splat_radius: float = DEFAULT_SPLAT_RADIUS
    iso_scale: float = DEFAULT_ISO_SCALE
    cutoff_sigma: float = FOOTPRINT_CUTOFF_SIGMA
    # Footprint alpha above this threshold counts as full mask support before
    # smoothing; the mask is near-binary with feathered edges.
    alpha_threshold: float = 0.05
    smooth_sigma_px: float = 3.0
    smooth_kernel_size: int = 13


DEFAULT_SETTINGS = RenderSettings()


@dataclass(frozen=True)
class ControlFrame:
    """The five conditioning maps for one frame."""

    bg_rgb: np.ndarray      # (H, W, 3) float32 in [0, 1]
    bg_depth: DepthMap
    traj_rgb: np.ndarray    # (H, W, 3) float32 in [0, 1]
    traj_depth: DepthMap
    mask: np.ndarray        # (H, W) float32 in [0, 1]

    def __post_init__(self):
        h, w = self.mask.shape
        for name, grid, shape in (
            ("bg_rgb", self.bg_rgb, (h, w, 3)),
            ("bg_depth", self.bg_depth.values, (h, w)),
            ("traj_rgb", self.traj_rgb, (h, w, 3)),
            ("traj_depth", self.traj_depth.values, (h, w)),
        ):
            if grid.shape != shape:
                raise ShapeError(f"{name} shape {grid.shape}, expected {shape}")
        if self.mask.size and (self.mask.min() < 0 or self.mask.max() > 1):
            raise ValueError("mask values must lie in [0, 1]")


def _smoothing_kernel(sigma: float, size: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D kernel is the outer product."""
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


@njit(cache=True, nogil=True)
def _mask_kernel(validity, alpha, threshold, taps, out):
    h, w = validity.shape
    k = taps.shape[0]
    half = k // 2
    raw = np.empty((h, w), dtype=np.float32)
    for i in range(h):
        for j in range(w):
            if not validity[i, j] or alpha[i, j] > threshold:
                raw[i, j] = 1.0
            else:
                raw[i, j] = 0.0
    tmp = np.empty((h, w), dtype=np.float32)
    for i in range(h):  # horizontal pass, borders clamped
        for j in range(w):
            acc = 0.0
            for n in range(k):
                jj = j + n - half
                if jj < 0:
                    jj = 0
                elif jj > w - 1:
                    jj = w - 1
                acc += taps[n] * raw[i, jj]
            tmp[i, j] = acc
    for i in range(h):  # vertical pass, row-contiguous accumulation
        for j in range(w):
            out[i, j] = 0.0
        for n in range(k):
            ii = i + n - half
            if ii < 0:
                ii = 0
            elif ii > h - 1:
                ii = h - 1
            t = taps[n]
            for j in range(w):
                out[i, j] += t * tmp[ii, j]
        for j in range(w):
            if out[i, j] < 0.0:
                out[i, j] = 0.0
            elif out[i, j] > 1.0:
                out[i, j] = 1.0


def build_control_mask(
    bg_validity: np.ndarray,
    footprint_alpha: np.ndarray,
    settings: RenderSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Merge inverted background visibility with binarized footprints, then smooth.

    Footprint alpha above ``alpha_threshold`` counts as full support; the
    merged grid is smoothed with a separable Gaussian (sigma
    ``smooth_sigma_px``, square ``smooth_kernel_size`` kernel, edge-clamped
    borders) and clamped to [0, 1]. Returns float32.
    """
    if bg_validity.shape != footprint_alpha.shape:
        raise ShapeError(
            f"validity {bg_validity.shape} vs footprint {footprint_alpha.shape}"
        )
    taps = _smoothing_kernel(settings.smooth_sigma_px, settings.smooth_kernel_size)
    out = np.empty(bg_validity.shape, dtype=np.float32)
    _mask_kernel(
        np.ascontiguousarray(bg_validity, dtype=np.bool_),
        np.ascontiguousarray(footprint_alpha, dtype=np.float64),
        float(settings.alpha_threshold),
        taps,
        out,
    )
    return out


def _zero_traj_channels(h: int, w: int):
    rgb = np.zeros((h, w, 3), dtype=np.float32)
    depth = DepthMap(np.zeros((h, w)), np.zeros((h, w), dtype=bool))
    alpha = np.zeros((h, w))
    return rgb, depth, alpha


def render_gaussian_frame(scene: SceneState, frame: int, pose, settings: RenderSettings):
    """Trajectory channels for one frame: (rgb, depth, union footprint alpha)."""
    gaussians = [o.trajectory.at(frame) for o in scene.objects]
    colors = [o.color for o in scene.objects]
    return gaussian_footprints(
        gaussians,
        colors,
        scene.camera.intrinsics,
        pose,
        iso_scale=settings.iso_scale,
        cutoff=settings.cutoff_sigma,
    )


def render_control_frame(
    scene: SceneState,
    frame: int,
    mode: RenderMode,
    settings: RenderSettings = DEFAULT_SETTINGS,
) -> ControlFrame:
    """Render the five maps for a 1-based frame index."""
    K = scene.camera.intrinsics
    camera = scene.camera.constant() if mode is RenderMode.OBJECT_ONLY else scene.camera
    pose = camera.pose_at(frame)

    bg_rgb, bg_depth = splat_points(
        scene.background.points, scene.background.colors, K, pose,
        radius=settings.splat_radius,
    )

    if mode is RenderMode.CAMERA_ONLY or not scene.objects:
        traj_rgb, traj_depth, alpha = _zero_traj_channels(K.height, K.width)
    else:
        traj_rgb, traj_depth, alpha = render_gaussian_frame(scene, frame, pose, settings)

    if frame == 1:
        bg_rgb = scene.first_frame_image.astype(np.float32) / 255.0
        mask = np.zeros((K.height, K.width), dtype=np.float32)
    else:
        mask = build_control_mask(bg_depth.validity, alpha, settings)

    return _trusted_control_frame(
        bg_rgb=bg_rgb,
        bg_depth=bg_depth,
        traj_rgb=traj_rgb,
        traj_depth=traj_depth,
        mask=mask,
    )


# ---------------------------------------------------------------------------
# Sequence rendering. Frames are independent, so a thread pool fans them out;
# the rasterizer kernels run without the GIL, which is where nearly all the
# cycles go. Threads beat forked workers here: no copy-on-write churn, no
# result transport, and identical output arrays either way.

_BLAS_PINNED = False


def _limit_worker_threads():
    """Pin BLAS pools to one thread in this process.

    Rendering issues thousands of tiny matrix products per sequence; a
    multi-threaded BLAS gains nothing on them but its worker threads spin
    between calls and can more than double wall time.
    """
    global _BLAS_PINNED
    if _BLAS_PINNED:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    try:
        from threadpoolctl import threadpool_limits

        global _BLAS_LIMITER
        _BLAS_LIMITER = threadpool_limits(1)  # held so the limit persists
        _BLAS_PINNED = True
    except ImportError:
        pass


def _trusted_control_frame(bg_rgb, bg_depth, traj_rgb, traj_depth, mask) -> "ControlFrame":
    """Assemble a frame from renderer-produced grids without re-validation."""
    cf = object.__new__(ControlFrame)
    object.__setattr__(cf, "bg_rgb", bg_rgb)
    object.__setattr__(cf, "bg_depth", bg_depth)
    object.__setattr__(cf, "traj_rgb", traj_rgb)
    object.__setattr__(cf, "traj_depth", traj_depth)
    object.__setattr__(cf, "mask", mask)
    return cf


def _warmup_render_kernels() -> None:
    warmup_kernels()
    build_control_mask(np.ones((2, 2), dtype=bool), np.zeros((2, 2)), DEFAULT_SETTINGS)


def render_control_sequence(
    scene: SceneState,
    mode: RenderMode,
    settings: RenderSettings = DEFAULT_SETTINGS,
    workers: int = 1,
) -> list:
    """Render every frame; ``workers > 1`` renders frames concurrently.

    Output is identical regardless of worker count.
    """
    _limit_worker_threads()
    t = scene.frame_count
    workers = max(1, min(workers, os.cpu_count() or 1))
    frames = range(1, t + 1)
    if workers <= 1 or t == 1:
        return [render_control_frame(scene, f, mode, settings) for f in frames]

    from concurrent.futures import ThreadPoolExecutor

    _warmup_render_kernels()  # compile once, not racing inside the pool
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda f: render_control_frame(scene, f, mode, settings), frames))


# ---------------------------------------------------------------------------
# Disk export
#
# bg_rgb_%04d.png / traj_rgb_%04d.png   8-bit RGB, round(255 * value)
# bg_depth_%04d.pfm / traj_depth_%04d.pfm   float32 PFM, invalid = +inf
# mask_%04d.png   8-bit grayscale, round(255 * value)
#
# In camera-only mode the trajectory channels are the zero signal, so the
# trajectory depth files hold zeros rather than +inf.


def _depth_for_export(d: DepthMap, zero_signal: bool) -> np.ndarray:
    if zero_signal:
        return np.zeros(d.shape, dtype=np.float32)
    return np.where(d.validity, d.values, np.inf).astype(np.float32)


def export_control_frame(cf: ControlFrame, frame: int, out_dir, mode: RenderMode) -> list:
    d = Path(out_dir)
    zero_traj = mode is RenderMode.CAMERA_ONLY
    paths = [
        d / f"bg_rgb_{frame:04d}.png",
        d / f"traj_rgb_{frame:04d}.png",
        d / f"bg_depth_{frame:04d}.pfm",
        d / f"traj_depth_{frame:04d}.pfm",
        d / f"mask_{frame:04d}.png",
    ]
    formats.write_png(paths[0], formats.quantize_unit(cf.bg_rgb))
    formats.write_png(paths[1], formats.quantize_unit(cf.traj_rgb))
    formats.write_pfm(paths[2], _depth_for_export(cf.bg_depth, False))
    formats.write_pfm(paths[3], _depth_for_export(cf.traj_depth, zero_traj))
    formats.write_png(paths[4], formats.quantize_unit(cf.mask))
    return paths


def export_control_sequence(
    scene: SceneState,
    mode: RenderMode,
    out_dir,
    settings: RenderSettings = DEFAULT_SETTINGS,
    workers: int = 1,
) -> list:
    """Render and write the whole sequence; returns the written paths in frame order."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    _limit_worker_threads()
    t = scene.frame_count
    workers = max(1, min(workers, os.cpu_count() or 1))

    def one(frame: int) -> list:
        cf = render_control_frame(scene, frame, mode, settings)
        return [str(p) for p in export_control_frame(cf, frame, d, mode)]

    if workers <= 1 or t == 1:
        chunks = [one(f) for f in range(1, t + 1)]
    else:
        from concurrent.futures import ThreadPoolExecutor

        _warmup_render_kernels()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, range(1, t + 1)))
    return [p for chunk in chunks for p in chunk]


def scale_scene(scene: SceneState, factor: float) -> SceneState:
    """Scene with intrinsics and first frame scaled (for reduced-size previews)."""
    from .camera import CameraIntrinsics, CameraTrack

    K = scene.camera.intrinsics
    w = max(1, int(round(K.width * factor)))
    h = max(1, int(round(K.height * factor)))
    sx, sy = w / K.width, h / K.height
    small = CameraIntrinsics(
        fx=K.fx * sx, fy=K.fy * sy, cx=K.cx * sx, cy=K.cy * sy, width=w, height=h
    )
    img = Image.fromarray(scene.first_frame_image).resize((w, h), Image.NEAREST)
    return SceneState(
        scene.background,
        scene.objects,
        CameraTrack(small, scene.camera.poses),
        np.asarray(img, dtype=np.uint8),
    )
