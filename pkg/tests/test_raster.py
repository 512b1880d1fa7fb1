"""Rasterizer internals: splat footprints and Gaussian footprints."""

from __future__ import annotations

import numpy as np
import pytest

from ctrl4d.camera import CameraIntrinsics, CameraPose
from ctrl4d.gaussians import Gaussian3
from ctrl4d.raster import (
    MAX_SPLAT_SIDE,
    footprint_stats,
    gaussian_footprints,
    splat_footprint_side,
    splat_points,
)

from conftest import centered_intrinsics
from oracles import random_rotation, ray_ellipsoid_nearest_depth

RED = np.array([1.0, 0.0, 0.0])
GREEN = np.array([0.0, 1.0, 0.0])


class TestSplatFootprintSide:
    def test_radius_zero_gives_single_pixel(self):
        assert splat_footprint_side(np.array([1.0, 5.0]), 100, 100, 0.0).tolist() == [1, 1]

    def test_formula(self):
        # s = round(r * f / z) with f the mean focal length
        s = splat_footprint_side(np.array([2.0]), 400, 600, 0.01)
        assert s[0] == round(0.01 * 500 / 2.0)

    def test_cap(self):
        s = splat_footprint_side(np.array([0.001]), 1000, 1000, 1.0)
        assert s[0] == MAX_SPLAT_SIDE


class TestSplatPoints:
    def test_empty_cloud_all_invalid(self):
        K = centered_intrinsics(8, 6)
        rgb, dm = splat_points(np.zeros((0, 3)), np.zeros((0, 3)), K, CameraPose.identity())
        assert not dm.validity.any()
        assert rgb.sum() == 0

    def test_behind_camera_culled(self):
        K = centered_intrinsics(8, 6)
        rgb, dm = splat_points(
            np.array([[0.0, 0.0, -2.0]]), RED[None], K, CameraPose.identity()
        )
        assert not dm.validity.any()

    def test_footprint_square(self):
        # radius picked so the splat covers exactly 3x3 pixels
        K = CameraIntrinsics(fx=100, fy=100, cx=4, cy=4, width=9, height=9)
        radius = 3.0 * 2.0 / 100.0  # s = round(r * f / z) = 3 at z = 2
        rgb, dm = splat_points(
            np.array([[0.0, 0.0, 2.0]]), RED[None], K, CameraPose.identity(), radius=radius
        )
        ys, xs = np.nonzero(dm.validity)
        assert sorted(zip(ys.tolist(), xs.tolist())) == [
            (y, x) for y in (3, 4, 5) for x in (3, 4, 5)
        ]

    def test_partial_offscreen_footprint_clipped(self):
        K = CameraIntrinsics(fx=100, fy=100, cx=0, cy=0, width=5, height=5)
        radius = 3.0 * 2.0 / 100.0
        rgb, dm = splat_points(
            np.array([[0.0, 0.0, 2.0]]), RED[None], K, CameraPose.identity(), radius=radius
        )
        ys, xs = np.nonzero(dm.validity)
        assert sorted(zip(ys.tolist(), xs.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]


class TestFootprints:
    def test_center_alpha_and_monotone_decay(self):
        K = centered_intrinsics(128, 96, f=100.0)
        g = Gaussian3(np.array([0, 0, 4.0]), 0.25 * np.eye(3))
        _, _, alpha = gaussian_footprints([g], [RED], K, CameraPose.identity())
        cy, cx = int(K.cy), int(K.cx)
        assert alpha[cy, cx] == pytest.approx(1.0, abs=1e-12)
        row = alpha[cy, cx:]
        diffs = np.diff(row)
        assert (diffs <= 1e-12).all()

    def test_center_depth_matches_ray_oracle(self):
        K = centered_intrinsics(128, 96, f=100.0)
        g = Gaussian3(np.array([0, 0, 4.0]), 0.25 * np.eye(3))
        _, dm, _ = gaussian_footprints([g], [RED], K, CameraPose.identity(), iso_scale=2.0)
        expected = ray_ellipsoid_nearest_depth(g.mean, g.cov, 2.0, np.array([0, 0, 1.0]))
        assert expected == pytest.approx(3.0, abs=1e-12)
        assert dm.values[int(K.cy), int(K.cx)] == pytest.approx(expected, abs=1e-6)

    def test_off_center_depth_matches_ray_oracle(self, rng):
        K = centered_intrinsics(128, 96, f=100.0)
        cov = np.array([[0.3, 0.05, 0.0], [0.05, 0.2, 0.02], [0.0, 0.02, 0.4]])
        g = Gaussian3(np.array([0.4, -0.2, 5.0]), cov)
        _, dm, _ = gaussian_footprints([g], [RED], K, CameraPose.identity(), iso_scale=2.0)
        ys, xs = np.nonzero(dm.validity)
        for y, x in list(zip(ys.tolist(), xs.tolist()))[:: max(1, len(ys) // 17)]:
            direction = np.array([(x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0])
            expected = ray_ellipsoid_nearest_depth(g.mean, g.cov, 2.0, direction)
            assert expected is not None
            assert dm.values[y, x] == pytest.approx(expected, rel=1e-6)

    def test_two_spheres_composite(self):
        # both alphas are 1 at center: the nearer sphere fully hides the farther
        K = centered_intrinsics(128, 96, f=100.0)
        near = Gaussian3(np.array([0, 0, 4.0]), 0.25 * np.eye(3))
        far = Gaussian3(np.array([0, 0, 6.0]), 0.25 * np.eye(3))
        rgb, dm, alpha = gaussian_footprints(
            [far, near], [RED, GREEN], K, CameraPose.identity()
        )
        cy, cx = int(K.cy), int(K.cx)
        np.testing.assert_allclose(rgb[cy, cx], GREEN, atol=1e-6)
        assert dm.values[cy, cx] == pytest.approx(4.0 - 2.0 * 0.5, abs=1e-6)
        assert alpha[cy, cx] == pytest.approx(1.0, abs=1e-12)

    def test_behind_camera_skipped(self):
        K = centered_intrinsics(64, 48)
        g = Gaussian3(np.array([0, 0, -4.0]), 0.25 * np.eye(3))
        rgb, dm, alpha = gaussian_footprints([g], [RED], K, CameraPose.identity())
        assert not dm.validity.any()
        assert alpha.max() == 0.0

    def test_alpha_cut_beyond_cutoff(self):
        K = centered_intrinsics(256, 192, f=100.0)
        g = Gaussian3(np.array([0, 0, 10.0]), 0.01 * np.eye(3))
        _, _, alpha = gaussian_footprints([g], [RED], K, CameraPose.identity(), cutoff=3.0)
        # sigma in pixels is ~1 px; alpha must vanish well outside 3 sigma
        assert alpha[int(K.cy), int(K.cx) + 30] == 0.0

    def test_depth_invalid_outside_silhouette(self):
        K = centered_intrinsics(128, 96, f=100.0)
        g = Gaussian3(np.array([0, 0, 4.0]), 0.25 * np.eye(3))
        _, dm, _ = gaussian_footprints([g], [RED], K, CameraPose.identity())
        assert not dm.validity[0, 0]

    def test_rotation_consistency(self, rng):
        # rendering a rotated Gaussian under a rotated camera matches identity
        K = centered_intrinsics(96, 80, f=90.0)
        rot = random_rotation(rng)
        g_world = Gaussian3(np.array([0.2, -0.1, 5.0]), np.diag([0.3, 0.2, 0.25]))
        pose = CameraPose(rot, np.zeros(3))
        g_pre = Gaussian3(rot.T @ g_world.mean, rot.T @ g_world.cov @ rot)
        a = gaussian_footprints([g_world], [RED], K, pose)
        b = gaussian_footprints([g_pre], [RED], K, CameraPose.identity())
        np.testing.assert_allclose(a[2], b[2], atol=1e-9)
        np.testing.assert_allclose(a[1].values, b[1].values, atol=1e-5)


class TestFootprintStats:
    def test_center_matches_projection(self):
        K = centered_intrinsics(128, 96, f=100.0)
        g = Gaussian3(np.array([0.5, 0.25, 5.0]), 0.04 * np.eye(3))
        (s,) = footprint_stats([g], K, CameraPose.identity())
        assert s.visible
        assert s.center[0] == pytest.approx(K.fx * 0.5 / 5.0 + K.cx)
        assert s.center[1] == pytest.approx(K.fy * 0.25 / 5.0 + K.cy)
        # symmetric footprint: rendered-alpha centroid sits on the projection
        assert s.alpha_centroid[0] == pytest.approx(s.center[0], abs=0.5)
        assert s.alpha_centroid[1] == pytest.approx(s.center[1], abs=0.5)

    def test_invisible_behind_camera(self):
        K = centered_intrinsics(64, 48)
        g = Gaussian3(np.array([0, 0, -1.0]), 0.04 * np.eye(3))
        (s,) = footprint_stats([g], K, CameraPose.identity())
        assert not s.visible
        assert s.alpha_centroid is None
