"""Software rasterizers: z-buffered point splats and soft Gaussian footprints.

The per-pixel inner loops are numba-compiled; rendering an 81-frame sequence
touches hundreds of millions of pixels and pure-numpy sort/scatter pipelines
are several times slower. Both rasterizers are deterministic: equal splat
depths resolve to the lowest point index, and Gaussians composite in
ascending order of center depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .camera import CameraIntrinsics, CameraPose, DepthMap
from .gaussians import DEFAULT_ISO_SCALE, Gaussian3

# Default world-space splat radius (m). Fixed-size world splats keep hole
# behavior consistent across viewpoints.
DEFAULT_SPLAT_RADIUS = 0.01

# Cap on the square footprint side (px) so near-camera points cannot blow up
# the splat workload.
MAX_SPLAT_SIDE = 64

# Footprint alpha is cut to zero beyond this many standard deviations.
FOOTPRINT_CUTOFF_SIGMA = 3.0


def splat_footprint_side(z: np.ndarray, fx: float, fy: float, radius: float) -> np.ndarray:
    """Square splat side in pixels for camera-space depth z: max(1, round(r*f/z))."""
    f = 0.5 * (fx + fy)
    s = np.rint(radius * f / np.asarray(z, dtype=np.float64))
    return np.clip(s, 1, MAX_SPLAT_SIDE).astype(np.int64)


@njit(cache=True, nogil=True)
def _splat_kernel(pts, rot, tr, fx, fy, cx, cy, h, w, radius, smax, zbuf, winner, cols, rgb):
    f = 0.5 * (fx + fy)
    for i in range(pts.shape[0]):
        px, py, pz = pts[i, 0], pts[i, 1], pts[i, 2]
        x = rot[0, 0] * px + rot[0, 1] * py + rot[0, 2] * pz + tr[0]
        y = rot[1, 0] * px + rot[1, 1] * py + rot[1, 2] * pz + tr[1]
        z = rot[2, 0] * px + rot[2, 1] * py + rot[2, 2] * pz + tr[2]
        if z <= 1e-12:
            continue
        iu = int(np.rint(fx * x / z + cx))
        iv = int(np.rint(fy * y / z + cy))
        s = int(np.rint(radius * f / z))
        if s < 1:
            s = 1
        elif s > smax:
            s = smax
        lo = (s - 1) // 2
        y0, y1 = iv - lo, iv - lo + s - 1
        x0, x1 = iu - lo, iu - lo + s - 1
        if y0 < 0:
            y0 = 0
        if x0 < 0:
            x0 = 0
        if y1 > h - 1:
            y1 = h - 1
        if x1 > w - 1:
            x1 = w - 1
        for yy in range(y0, y1 + 1):
            rowbase = yy * w
            for xx in range(x0, x1 + 1):
                p = rowbase + xx
                wi = winner[p]
                if wi < 0 or z < zbuf[p] or (z == zbuf[p] and i < wi):
                    zbuf[p] = z
                    winner[p] = i
                    rgb[p, 0] = cols[i, 0]
                    rgb[p, 1] = cols[i, 1]
                    rgb[p, 2] = cols[i, 2]


def splat_points(
    points: np.ndarray,
    colors: np.ndarray,
    K: CameraIntrinsics,
    pose: CameraPose,
    radius: float = DEFAULT_SPLAT_RADIUS,
):
    """Render a colored point cloud with a per-pixel z-buffer.

    Each point covers a square of side ``max(1, round(radius * f / z))``
    pixels (f the mean focal length, capped at MAX_SPLAT_SIDE) centered on
    its rounded projection. Returns (rgb float32 (H, W, 3) in [0, 1],
    DepthMap); pixels hit by no point are invalid in the DepthMap.
    """
    h, w = K.height, K.width
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    cols = np.ascontiguousarray(np.asarray(colors, dtype=np.float32).reshape(-1, 3))
    if pts.shape[0] != cols.shape[0]:
        raise ValueError(f"{pts.shape[0]} points vs {cols.shape[0]} colors")

    rgb = np.zeros((h, w, 3), dtype=np.float32)
    zbuf = np.zeros(h * w, dtype=np.float64)
    winner = np.full(h * w, -1, dtype=np.int64)
    if pts.shape[0]:
        _splat_kernel(
            pts, pose.rotation, pose.translation,
            K.fx, K.fy, K.cx, K.cy, h, w,
            float(radius), MAX_SPLAT_SIDE,
            zbuf, winner, cols, rgb.reshape(-1, 3),
        )
    validity = (winner >= 0).reshape(h, w)
    # comparisons run in float64; stored depth is float32 (export precision)
    return rgb, DepthMap._wrap(zbuf.astype(np.float32).reshape(h, w), validity)


@njit(cache=True, nogil=True)
def _footprint_kernel(
    x0, x1, y0, y1, u0, v0, ia, ib, ic, cutoff2,
    a00, a01, a02, a11, a12, a22, m0, m1, m2, qc,
    fx, fy, cx, cy, cr, cg, cb, rgb, trans, zbuf,
):
    for yy in range(y0, y1 + 1):
        dv = yy - v0
        dy = (yy - cy) / fy
        for xx in range(x0, x1 + 1):
            du = xx - u0
            d2 = ia * du * du + 2.0 * ib * du * dv + ic * dv * dv
            if d2 <= cutoff2:
                a = np.exp(-0.5 * d2)
                t = trans[yy, xx]
                wgt = t * a
                rgb[yy, xx, 0] += np.float32(wgt * cr)
                rgb[yy, xx, 1] += np.float32(wgt * cg)
                rgb[yy, xx, 2] += np.float32(wgt * cb)
                trans[yy, xx] = t * (1.0 - a)
            dx = (xx - cx) / fx
            qa = a00 * dx * dx + a11 * dy * dy + a22 + 2.0 * (
                a01 * dx * dy + a02 * dx + a12 * dy
            )
            qb = -2.0 * (m0 * dx + m1 * dy + m2)
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0.0:
                sq = np.sqrt(disc)
                # qc > 0 means the camera sits outside the ellipsoid: roots
                # share a sign, the near one decides. Inside, take the exit.
                if qc > 0.0:
                    t_hit = (-qb - sq) / (2.0 * qa)
                else:
                    t_hit = (-qb + sq) / (2.0 * qa)
                if 0.0 < t_hit < zbuf[yy, xx]:
                    zbuf[yy, xx] = t_hit


@dataclass(frozen=True)
class FootprintStats:
    """Screen-space summary of one Gaussian's rendered footprint."""

    index: int
    visible: bool
    center: tuple  # analytic projection of the mean (column, row)
    center_depth: float
    alpha_sum: float
    alpha_centroid: tuple | None  # rendered-alpha centroid (column, row)


def _project_gaussian(g: Gaussian3, K: CameraIntrinsics, pose: CameraPose):
    """Camera-frame mean/covariance plus the EWA 2-D covariance at the mean."""
    mu_c = pose.rotation @ g.mean + pose.translation
    z = mu_c[2]
    if z <= 0:
        return None
    cov_c = pose.rotation @ g.cov @ pose.rotation.T
    jac = np.array(
        [
            [K.fx / z, 0.0, -K.fx * mu_c[0] / z**2],
            [0.0, K.fy / z, -K.fy * mu_c[1] / z**2],
        ]
    )
    cov2 = jac @ cov_c @ jac.T
    cov2 = 0.5 * (cov2 + cov2.T)
    center = np.array([K.fx * mu_c[0] / z + K.cx, K.fy * mu_c[1] / z + K.cy])
    return mu_c, cov_c, cov2, center


def _footprint_window(center, cov2, K: CameraIntrinsics, cutoff: float):
    rx = cutoff * np.sqrt(max(cov2[0, 0], 0.0))
    ry = cutoff * np.sqrt(max(cov2[1, 1], 0.0))
    x0 = max(0, int(np.floor(center[0] - rx)))
    x1 = min(K.width - 1, int(np.ceil(center[0] + rx)))
    y0 = max(0, int(np.floor(center[1] - ry)))
    y1 = min(K.height - 1, int(np.ceil(center[1] + ry)))
    if x0 > x1 or y0 > y1:
        return None
    return x0, x1, y0, y1


def _inverse_2x2(cov2: np.ndarray):
    det = cov2[0, 0] * cov2[1, 1] - cov2[0, 1] ** 2
    det = max(det, 1e-300)
    return cov2[1, 1] / det, -cov2[0, 1] / det, cov2[0, 0] / det


def _footprint_alpha(center, cov2, window, cutoff: float):
    """Alpha grid exp(-d^2/2) over the window; zero beyond the cutoff."""
    x0, x1, y0, y1 = window
    du = np.arange(x0, x1 + 1, dtype=np.float64) - center[0]
    dv = np.arange(y0, y1 + 1, dtype=np.float64) - center[1]
    ia, ib, ic = _inverse_2x2(cov2)
    d2 = (
        ia * du[None, :] ** 2
        + 2.0 * ib * du[None, :] * dv[:, None]
        + ic * dv[:, None] ** 2
    )
    alpha = np.exp(-0.5 * d2)
    alpha[d2 > cutoff * cutoff] = 0.0
    return alpha


def gaussian_footprints(
    gaussians: Sequence[Gaussian3],
    colors: Sequence[np.ndarray],
    K: CameraIntrinsics,
    pose: CameraPose,
    iso_scale: float = DEFAULT_ISO_SCALE,
    cutoff: float = FOOTPRINT_CUTOFF_SIGMA,
):
    """Render soft elliptical footprints with ellipsoid-surface depth.

    Per pixel, alpha is exp(-d^2/2) of the Mahalanobis distance in the
    perspective-projected 2-D covariance, cut to zero beyond ``cutoff``
    standard deviations; depth is the nearest ray hit on the
    ``iso_scale``-sigma ellipsoid. Colors composite front to back in order of
    center depth; overlapping footprints alpha-blend (hard occlusion would be
    the alternative). Gaussians behind the camera are skipped.

    Returns (rgb float32 (H, W, 3), DepthMap, union alpha float64 (H, W)).
    """
    h, w = K.height, K.width
    rgb = np.zeros((h, w, 3), dtype=np.float32)
    trans = np.ones((h, w), dtype=np.float64)
    zbuf = np.full((h, w), np.inf, dtype=np.float64)

    projected = []
    for i, g in enumerate(gaussians):
        proj = _project_gaussian(g, K, pose)
        if proj is None:
            continue
        projected.append((proj[0][2], i, proj))
    projected.sort(key=lambda e: (e[0], e[1]))

    for _, i, (mu_c, cov_c, cov2, center) in projected:
        window = _footprint_window(center, cov2, K, cutoff)
        if window is None:
            continue
        x0, x1, y0, y1 = window
        ia, ib, ic = _inverse_2x2(cov2)
        a3 = np.linalg.inv(cov_c)
        m = a3 @ mu_c
        qc = float(mu_c @ m) - iso_scale * iso_scale
        color = np.asarray(colors[i], dtype=np.float64).reshape(3)
        _footprint_kernel(
            x0, x1, y0, y1, center[0], center[1], ia, ib, ic, cutoff * cutoff,
            a3[0, 0], a3[0, 1], a3[0, 2], a3[1, 1], a3[1, 2], a3[2, 2],
            m[0], m[1], m[2], qc,
            K.fx, K.fy, K.cx, K.cy, color[0], color[1], color[2],
            rgb, trans, zbuf,
        )

    validity = np.isfinite(zbuf)
    depth = DepthMap._wrap(
        np.where(validity, zbuf, 0.0).astype(np.float32), validity
    )
    return rgb, depth, 1.0 - trans


def footprint_stats(
    gaussians: Sequence[Gaussian3],
    K: CameraIntrinsics,
    pose: CameraPose,
    cutoff: float = FOOTPRINT_CUTOFF_SIGMA,
) -> list:
    """Per-Gaussian screen-space stats (projection center, rendered-alpha centroid)."""
    stats = []
    for i, g in enumerate(gaussians):
        proj = _project_gaussian(g, K, pose)
        if proj is None:
            stats.append(
                FootprintStats(i, False, (float("nan"), float("nan")), float("nan"), 0.0, None)
            )
            continue
        mu_c, _, cov2, center = proj
        window = _footprint_window(center, cov2, K, cutoff)
        if window is None:
            stats.append(FootprintStats(i, False, tuple(center), float(mu_c[2]), 0.0, None))
            continue
        x0, x1, y0, y1 = window
        alpha = _footprint_alpha(center, cov2, window, cutoff)
        total = float(alpha.sum())
        centroid = None
        if total > 0:
            xs = np.arange(x0, x1 + 1, dtype=np.float64)
            ys = np.arange(y0, y1 + 1, dtype=np.float64)
            mx = float((alpha.sum(axis=0) * xs).sum() / total)
            my = float((alpha.sum(axis=1) * ys).sum() / total)
            centroid = (mx, my)
        stats.append(
            FootprintStats(i, total > 0, tuple(center), float(mu_c[2]), total, centroid)
        )
    return stats


def warmup_kernels() -> None:
    """Force JIT compilation with tiny inputs (call before forking workers)."""
    K = CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=2, height=2)
    pose = CameraPose.identity()
    splat_points(np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]), K, pose)
    g = Gaussian3(np.array([0.0, 0.0, 2.0]), np.eye(3) * 0.01)
    gaussian_footprints([g], [np.array([1.0, 0.0, 0.0])], K, pose)
