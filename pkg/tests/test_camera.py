"""Camera model, pose algebra, and projection primitives.

The spec'd examples are asserted verbatim; the round-trip identity is checked
against randomized cameras built from QR-decomposed random matrices.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ctrl4d.camera import (
    CameraIntrinsics,
    CameraPose,
    CameraTrack,
    DepthMap,
    back_project,
    back_project_pixels,
    camera_center,
    load_intrinsics,
    load_poses,
    pose_compose,
    pose_inverse,
    project,
    project_points,
    save_intrinsics,
    save_poses,
)
from ctrl4d.errors import BehindCamera, BoundsError, DomainError, ShapeError

from conftest import identity_intrinsics
from oracles import random_rotation


def rot_z(deg: float) -> np.ndarray:
    a = math.radians(deg)
    return np.array(
        [[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]]
    )


class TestBackProject:
    def test_identity_camera(self):
        K = identity_intrinsics()
        p = back_project((0, 0, 1), 2.0, K, CameraPose.identity())
        np.testing.assert_allclose(p, [0, 0, 2])

    def test_translated_camera(self):
        # p = R^T (d K^-1 u - t) = (0,0,2) - (0,0,-1) = (0,0,3)
        K = identity_intrinsics()
        pose = CameraPose(np.eye(3), np.array([0.0, 0.0, -1.0]))
        np.testing.assert_allclose(back_project((0, 0, 1), 2.0, K, pose), [0, 0, 3])

    def test_scaled_intrinsics(self):
        # K^-1 u = ((3-1)/2, 0, 1) = (1, 0, 1), scaled by depth 2
        K = CameraIntrinsics(fx=2, fy=1, cx=1, cy=0, width=8, height=8)
        p = back_project((3, 0, 1), 2.0, K, CameraPose.identity())
        np.testing.assert_allclose(p, [2, 0, 2])

    def test_nonpositive_depth_rejected(self):
        K = identity_intrinsics()
        with pytest.raises(DomainError):
            back_project((0, 0, 1), 0.0, K, CameraPose.identity())
        with pytest.raises(DomainError):
            back_project((0, 0, 1), -1.0, K, CameraPose.identity())

    def test_out_of_bounds_pixel_rejected(self):
        K = identity_intrinsics(width=4, height=4)
        with pytest.raises(BoundsError):
            back_project((4, 0, 1), 1.0, K, CameraPose.identity())
        with pytest.raises(BoundsError):
            back_project((0, -1, 1), 1.0, K, CameraPose.identity())


class TestProject:
    def test_identity_camera(self):
        K = identity_intrinsics()
        pix, depth = project((0, 0, 2), K, CameraPose.identity())
        np.testing.assert_allclose(pix, [0, 0])
        assert depth == 2.0

    def test_scaled_intrinsics(self):
        K = CameraIntrinsics(fx=2, fy=1, cx=1, cy=0, width=8, height=8)
        pix, depth = project((2, 0, 2), K, CameraPose.identity())
        np.testing.assert_allclose(pix, [3, 0])
        assert depth == 2.0

    def test_behind_camera(self):
        K = identity_intrinsics()
        with pytest.raises(BehindCamera):
            project((0, 0, -1), K, CameraPose.identity())


class TestRoundTrip:
    def test_random_cameras(self, rng):
        for _ in range(200):
            w, h = 64, 48
            K = CameraIntrinsics(
                fx=float(rng.uniform(20, 500)),
                fy=float(rng.uniform(20, 500)),
                cx=float(rng.uniform(0, w - 1)),
                cy=float(rng.uniform(0, h - 1)),
                width=w,
                height=h,
            )
            pose = CameraPose(random_rotation(rng), rng.normal(size=3))
            col = float(rng.uniform(0, w - 1))
            row = float(rng.uniform(0, h - 1))
            d = float(rng.uniform(0.1, 100.0))
            p = back_project((col, row, 1), d, K, pose)
            pix, depth = project(p, K, pose)
            assert abs(pix[0] - col) < 1e-6 and abs(pix[1] - row) < 1e-6
            assert abs(depth - d) < 1e-9

    def test_vectorized_matches_scalar(self, rng):
        K = identity_intrinsics(width=16, height=16)
        pose = CameraPose(random_rotation(rng), rng.normal(size=3))
        cols = rng.uniform(0, 15, 50)
        rows = rng.uniform(0, 15, 50)
        depths = rng.uniform(0.5, 5.0, 50)
        pts = back_project_pixels(cols, rows, depths, K, pose)
        for i in range(50):
            expected = back_project((cols[i], rows[i], 1), depths[i], K, pose)
            np.testing.assert_allclose(pts[i], expected, atol=1e-12)
        pix, z = project_points(pts, K, pose)
        np.testing.assert_allclose(pix[:, 0], cols, atol=1e-9)
        np.testing.assert_allclose(pix[:, 1], rows, atol=1e-9)
        np.testing.assert_allclose(z, depths, atol=1e-12)


class TestPoseAlgebra:
    def test_inverse_identity(self):
        inv = pose_inverse(CameraPose.identity())
        np.testing.assert_allclose(inv.rotation, np.eye(3))
        np.testing.assert_allclose(inv.translation, np.zeros(3))

    def test_inverse_rotation(self):
        inv = pose_inverse(CameraPose(rot_z(90), np.zeros(3)))
        np.testing.assert_allclose(inv.rotation, rot_z(-90), atol=1e-12)

    def test_compose_with_inverse_is_identity(self, rng):
        # property check over 1000 random orthonormal matrices from QR
        for _ in range(1000):
            pose = CameraPose(random_rotation(rng), rng.normal(size=3))
            ident = pose_compose(pose, pose_inverse(pose))
            assert np.abs(ident.rotation - np.eye(3)).max() < 1e-9
            assert np.abs(ident.translation).max() < 1e-9

    def test_compose_applies_second_argument_first(self, rng):
        a = CameraPose(random_rotation(rng), rng.normal(size=3))
        b = CameraPose(random_rotation(rng), rng.normal(size=3))
        x = rng.normal(size=3)
        via_compose = pose_compose(a, b).rotation @ x + pose_compose(a, b).translation
        direct = a.rotation @ (b.rotation @ x + b.translation) + a.translation
        np.testing.assert_allclose(via_compose, direct, atol=1e-12)

    def test_rigidity(self, rng):
        # distances between world points survive the world->camera map
        pose = CameraPose(random_rotation(rng), rng.normal(size=3))
        pts = rng.normal(size=(20, 3)) * 10
        cam = pts @ pose.rotation.T + pose.translation
        for i in range(0, 20, 3):
            for j in range(20):
                d_world = np.linalg.norm(pts[i] - pts[j])
                d_cam = np.linalg.norm(cam[i] - cam[j])
                assert abs(d_world - d_cam) < 1e-9

    def test_camera_center(self, rng):
        pose = CameraPose(random_rotation(rng), rng.normal(size=3))
        c = camera_center(pose)
        np.testing.assert_allclose(pose.rotation @ c + pose.translation, 0, atol=1e-12)


class TestValidation:
    def test_rotation_orthonormality_checked(self):
        bad = np.eye(3)
        bad = bad + 1e-3
        with pytest.raises(ValueError):
            CameraPose(bad, np.zeros(3))

    def test_reflection_rejected(self):
        refl = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            CameraPose(refl, np.zeros(3))

    def test_intrinsics_invariants(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=0, fy=1, cx=0, cy=0, width=4, height=4)
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=1, fy=1, cx=4, cy=0, width=4, height=4)

    def test_depth_map_invariants(self):
        with pytest.raises(ValueError):
            DepthMap(np.array([[-1.0]]), np.array([[True]]))
        dm = DepthMap.from_array(np.array([[1.0, -2.0], [np.inf, 0.5]]))
        assert dm.validity.tolist() == [[True, False], [False, True]]

    def test_track_needs_pose(self):
        K = identity_intrinsics()
        with pytest.raises(ValueError):
            CameraTrack(K, ())
        track = CameraTrack(K, (CameraPose.identity(),))
        with pytest.raises(BoundsError):
            track.pose_at(2)


class TestQuaternionAndJson:
    def test_quaternion_90z(self):
        pose = CameraPose.from_quaternion(
            (math.cos(math.pi / 4), 0, 0, math.sin(math.pi / 4)), (0, 0, 0)
        )
        np.testing.assert_allclose(pose.rotation, rot_z(90), atol=1e-12)

    def test_pose_json_roundtrip(self, rng, tmp_path):
        poses = [CameraPose(random_rotation(rng), rng.normal(size=3)) for _ in range(4)]
        path = tmp_path / "poses.json"
        save_poses(poses, path)
        loaded = load_poses(path)
        for a, b in zip(poses, loaded):
            np.testing.assert_allclose(a.rotation, b.rotation, atol=1e-15)
            np.testing.assert_allclose(a.translation, b.translation, atol=1e-15)

    def test_pose_json_accepts_quaternion(self, tmp_path):
        path = tmp_path / "poses.json"
        path.write_text(json.dumps([{"q": [1, 0, 0, 0], "t": [1, 2, 3]}]))
        (pose,) = load_poses(path)
        np.testing.assert_allclose(pose.rotation, np.eye(3))
        np.testing.assert_allclose(pose.translation, [1, 2, 3])

    def test_intrinsics_json_roundtrip(self, tmp_path):
        K = CameraIntrinsics(fx=10, fy=11, cx=3, cy=4, width=8, height=9)
        path = tmp_path / "intrinsics.json"
        save_intrinsics(K, path)
        assert load_intrinsics(path) == K
