"""3D Gaussian trajectories: fitting, keyframe interpolation, derived encodings.

A per-object trajectory is a per-frame sequence of (mean, covariance) pairs in
the shared world frame. Covariances are kept strictly positive definite by a
fixed diagonal regularization so that thin or degenerate object clouds (a
pedestrian seen edge-on collapses to a plane) never produce singular matrices.
"""

from __future__ import annotations

import colorsys
import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundsError, EmptyObjectError

# Minimum covariance eigenvalue (m^2) enforced everywhere.
COV_EPSILON = 1e-6

# Ellipsoid iso-surface scale: +-k standard deviations per axis. Shared by
# depth rendering and oriented boxes, ~95% of mass per axis at k = 2.
DEFAULT_ISO_SCALE = 2.0

_SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class Gaussian3:
    """A single 3D Gaussian: world-frame mean (m) and covariance (m^2)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(3)
        cov = np.array(self.cov, dtype=np.float64).reshape(3, 3)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("Gaussian parameters must be finite")
        if np.abs(cov - cov.T).max() > _SYMMETRY_TOL:
            raise ValueError("covariance must be symmetric within 1e-9")
        cov = 0.5 * (cov + cov.T)
        lam_min = np.linalg.eigvalsh(cov)[0]
        if lam_min < COV_EPSILON:
            cov = cov + (COV_EPSILON - lam_min) * np.eye(3)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def to_dict(self) -> dict:
        return {"mu": self.mean.tolist(), "sigma": self.cov.reshape(-1).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Gaussian3":
        return cls(np.asarray(d["mu"], dtype=np.float64),
                   np.asarray(d["sigma"], dtype=np.float64).reshape(3, 3))


def fit_gaussian(points: np.ndarray) -> Gaussian3:
    """Fit mean and population covariance (divide by N) to a point set.

    The covariance gets ``COV_EPSILON * I`` added so single points and
    collinear/coplanar sets still yield a positive-definite Gaussian.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise EmptyObjectError("cannot fit a Gaussian to an empty point set")
    mu = pts.mean(axis=0)
    centered = pts - mu
    cov = centered.T @ centered / pts.shape[0]
    return Gaussian3(mu, cov + COV_EPSILON * np.eye(3))


def color_for_object(object_id: str) -> np.ndarray:
    """Deterministic full-saturation RGB for an object id (stable across runs)."""
    digest = hashlib.sha256(object_id.encode("utf-8")).digest()
    hue = int.from_bytes(digest[:4], "big") / 2**32
    return np.array(colorsys.hsv_to_rgb(hue, 1.0, 1.0))


@dataclass(frozen=True)
class GaussianTrajectory:
    """Per-frame Gaussians for one object, plus its rendering color."""

    object_id: str
    frames: tuple
    color: np.ndarray

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise ValueError("trajectory needs at least one frame")
        for g in frames:
            if not isinstance(g, Gaussian3):
                raise TypeError("trajectory frames must be Gaussian3")
        color = np.clip(np.array(self.color, dtype=np.float64).reshape(3), 0.0, 1.0)
        color.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "color", color)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def at(self, frame: int) -> Gaussian3:
        """Gaussian for 1-based frame index."""
        if not 1 <= frame <= len(self.frames):
            raise BoundsError(f"frame {frame} outside [1, {len(self.frames)}]")
        return self.frames[frame - 1]


@dataclass(frozen=True)
class KeyframeTrack:
    """Sparse (frame, Gaussian3) keys, strictly increasing 1-based frames."""

    keys: tuple

    def __post_init__(self):
        keys = tuple((int(f), g) for f, g in self.keys)
        if len(keys) < 1:
            raise ValueError("keyframe track needs at least one key")
        frames = [f for f, _ in keys]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"key frames must be strictly increasing, got {frames}")
        if frames[0] < 1:
            raise BoundsError(f"key frame {frames[0]} < 1")
        for _, g in keys:
            if not isinstance(g, Gaussian3):
                raise TypeError("key values must be Gaussian3")
        object.__setattr__(self, "keys", keys)

    @property
    def last_frame(self) -> int:
        return self.keys[-1][0]


def _spd_log(S: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(S)
    return (V * np.log(lam)) @ V.T


def _spd_exp(L: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(L)
    return (V * np.exp(lam)) @ V.T


def interpolate_track(
    track: KeyframeTrack,
    frame_count: int,
    object_id: str = "",
    color: Sequence[float] | None = None,
) -> GaussianTrajectory:
    """Densify a keyframe track to one Gaussian per frame.

    Means interpolate linearly between bracketing keys; covariances
    interpolate in the matrix-logarithm domain, which keeps every in-between
    covariance positive definite and scales anisotropy geometrically. Before
    the first key and after the last the value is held constant. Key frames
    reproduce their key exactly.
    """
    if track.last_frame > frame_count:
        raise BoundsError(
            f"key frame {track.last_frame} outside [1, {frame_count}]"
        )
    if color is None:
        color = color_for_object(object_id)

    keys = track.keys
    key_frames = [f for f, _ in keys]
    frames: list[Gaussian3] = []
    log_cache: dict[int, np.ndarray] = {}

    def log_of(i: int) -> np.ndarray:
        if i not in log_cache:
            log_cache[i] = _spd_log(keys[i][1].cov)
        return log_cache[i]

    for t in range(1, frame_count + 1):
        if t <= key_frames[0]:
            frames.append(keys[0][1])
            continue
        if t >= key_frames[-1]:
            frames.append(keys[-1][1])
            continue
        hi = next(i for i, f in enumerate(key_frames) if f >= t)
        if key_frames[hi] == t:
            frames.append(keys[hi][1])
            continue
        lo = hi - 1
        (f0, g0), (f1, g1) = keys[lo], keys[hi]
        alpha = (t - f0) / (f1 - f0)
        mu = (1.0 - alpha) * g0.mean + alpha * g1.mean
        cov = _spd_exp((1.0 - alpha) * log_of(lo) + alpha * log_of(hi))
        frames.append(Gaussian3(mu, cov))

    return GaussianTrajectory(object_id=object_id, frames=tuple(frames), color=color)


def smooth_trajectory(traj: GaussianTrajectory, window: int = 1) -> GaussianTrajectory:
    """Centered moving average over frames (means linear, covariances in log domain).

    ``window`` must be odd; 1 is the identity. Off by default everywhere:
    per-frame fits from noisy upstream geometry can be smoothed explicitly.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if window == 1 or traj.frame_count == 1:
        return traj
    half = window // 2
    mus = np.stack([g.mean for g in traj.frames])
    logs = np.stack([_spd_log(g.cov) for g in traj.frames])
    out = []
    n = traj.frame_count
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        out.append(Gaussian3(mus[lo:hi].mean(axis=0), _spd_exp(logs[lo:hi].mean(axis=0))))
    return GaussianTrajectory(traj.object_id, tuple(out), traj.color)


@dataclass(frozen=True)
class OrientedBox3:
    """Axis frame + half extents derived from a Gaussian's principal spreads."""

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64).reshape(3)
        axes = np.array(self.axes, dtype=np.float64).reshape(3, 3)
        half = np.array(self.half_extents, dtype=np.float64).reshape(3)
        if np.abs(axes.T @ axes - np.eye(3)).max() > 1e-6:
            raise ValueError("box axes must be orthonormal")
        if half.min() <= 0:
            raise ValueError("half extents must be positive")
        for a in (center, axes, half):
            a.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "half_extents", half)

    def corners(self) -> np.ndarray:
        """(8, 3) world-frame corners."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center + (signs * self.half_extents) @ self.axes.T


def principal_axes(g: Gaussian3):
    """Eigen-decomposition with a deterministic axis convention.

    Eigenvalues sorted descending. Each of the first two eigenvectors has its
    largest-magnitude component made positive; the third is the cross product
    of the first two, guaranteeing a right-handed frame regardless of input.
    """
    lam, V = np.linalg.eigh(g.cov)
    order = np.argsort(-lam, kind="stable")  # stable so equal eigenvalues keep eigh's order
    lam = lam[order]
    V = V[:, order]
    axes = np.empty((3, 3))
    for i in range(2):
        v = V[:, i]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        axes[:, i] = v
    axes[:, 2] = np.cross(axes[:, 0], axes[:, 1])
    return lam, axes


def to_oriented_box(g: Gaussian3, k: float = DEFAULT_ISO_SCALE) -> OrientedBox3:
    """Oriented box whose axes follow the principal directions; sides k*sqrt(eigenvalue)."""
    lam, axes = principal_axes(g)
    return OrientedBox3(center=g.mean, axes=axes, half_extents=k * np.sqrt(lam))


def to_point_trajectory(traj: GaussianTrajectory) -> np.ndarray:
    """(T, 3) centroid path: the means of the per-frame Gaussians."""
    return np.stack([g.mean for g in traj.frames])


# ---------------------------------------------------------------------------
# Keyframe JSON: {"object_id", "color": [r,g,b], "keys": [{"frame","mu","sigma"}]}


def keyframes_to_json(object_id: str, color: np.ndarray, track: KeyframeTrack) -> dict:
    return {
        "object_id": object_id,
        "color": np.asarray(color, dtype=np.float64).tolist(),
        "keys": [{"frame": f, **g.to_dict()} for f, g in track.keys],
    }


def keyframes_from_json(d: dict):
    """Returns (object_id, color, KeyframeTrack)."""
    track = KeyframeTrack(
        tuple((int(k["frame"]), Gaussian3.from_dict(k)) for k in d["keys"])
    )
    color = np.asarray(d.get("color", color_for_object(d["object_id"])), dtype=np.float64)
    return d["object_id"], color, track


def save_keyframes(path, object_id: str, color, track: KeyframeTrack) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(keyframes_to_json(object_id, color, track), f, indent=2)


def load_keyframes(path):
    with open(path, "r", encoding="utf-8") as f:
        return keyframes_from_json(json.load(f))
