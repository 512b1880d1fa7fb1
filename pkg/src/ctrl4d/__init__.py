"""ctrl4d: build, edit, render, pack, and evaluate 4D scene control states.

The world state is a static background point cloud plus per-object 3D
Gaussian trajectories in one shared world frame. It renders into per-frame
conditioning maps (background RGB/depth, trajectory RGB/depth, soft control
mask), packs into latent-aligned tensors, and is scored by camera/object
motion metrics.
"""

from . import _alloc  # noqa: F401  (allocator tuning, see module docstring)
from .camera import (
    CameraIntrinsics,
    CameraPose,
    CameraTrack,
    DepthMap,
    back_project,
    pose_compose,
    pose_inverse,
    project,
)
from .errors import (
    BehindCamera,
    BoundsError,
    Ctrl4DError,
    DomainError,
    EmptyObjectError,
    ManifestError,
    ShapeError,
)
from .gaussians import (
    Gaussian3,
    GaussianTrajectory,
    KeyframeTrack,
    OrientedBox3,
    fit_gaussian,
    interpolate_track,
    to_oriented_box,
    to_point_trajectory,
)
from .metrics import EvalReport, evaluate_pair, objmc, rot_err, trans_err
from .packing import PackedMask, StrideConfig, assemble_geometry_tensor, rearrange_mask, unpack_mask
from .render import (
    ControlFrame,
    RenderMode,
    RenderSettings,
    build_control_mask,
    export_control_sequence,
    render_control_frame,
    render_control_sequence,
)
from .scene import (
    ColoredPointCloud,
    InstanceMask,
    SceneState,
    build_scene,
    load_scene,
    render_background_points,
    save_scene,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCamera",
    "BoundsError",
    "CameraIntrinsics",
    "CameraPose",
    "CameraTrack",
    "ColoredPointCloud",
    "ControlFrame",
    "Ctrl4DError",
    "DepthMap",
    "DomainError",
    "EmptyObjectError",
    "EvalReport",
    "Gaussian3",
    "GaussianTrajectory",
    "InstanceMask",
    "KeyframeTrack",
    "ManifestError",
    "OrientedBox3",
    "PackedMask",
    "RenderMode",
    "RenderSettings",
    "SceneState",
    "ShapeError",
    "StrideConfig",
    "assemble_geometry_tensor",
    "back_project",
    "build_control_mask",
    "build_scene",
    "evaluate_pair",
    "export_control_sequence",
    "fit_gaussian",
    "interpolate_track",
    "load_scene",
    "objmc",
    "pose_compose",
    "pose_inverse",
    "project",
    "rearrange_mask",
    "render_background_points",
    "render_control_frame",
    "render_control_sequence",
    "rot_err",
    "save_scene",
    "to_oriented_box",
    "to_point_trajectory",
    "trans_err",
    "unpack_mask",
]
