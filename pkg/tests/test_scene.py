"""Scene construction (pixel partition) and background rendering."""

from __future__ import annotations

import numpy as np
import pytest

from ctrl4d.camera import CameraIntrinsics, CameraPose, CameraTrack, DepthMap
from ctrl4d.errors import BoundsError, EmptyObjectError, ShapeError
from ctrl4d.gaussians import Gaussian3, KeyframeTrack
from ctrl4d.scene import (
    ColoredPointCloud,
    InstanceMask,
    SceneState,
    build_scene,
    load_scene,
    render_background_points,
    save_scene,
)
from ctrl4d.formats import quantize_unit

from conftest import centered_intrinsics, identity_intrinsics, make_scene
from oracles import brute_force_splat, random_rotation


def flat_image(h, w, value=100):
    return np.full((h, w, 3), value, dtype=np.uint8)


def full_depth(h, w, value=2.0):
    return DepthMap(np.full((h, w), value), np.ones((h, w), dtype=bool))


class TestBuildScene:
    def test_two_by_two_single_mask(self):
        # one masked pixel out of four valid -> background 3, object 1
        img = flat_image(2, 2)
        depth = full_depth(2, 2)
        mask = np.zeros((2, 2), dtype=bool)
        mask[0, 0] = True
        K = identity_intrinsics(2, 2)
        scene = build_scene(img, depth, [InstanceMask("a", mask)], K, CameraPose.identity())
        assert len(scene.background) == 3
        assert len(scene.objects[0].cloud) == 1

    def test_no_masks(self):
        img = flat_image(3, 4)
        depth = full_depth(3, 4)
        K = identity_intrinsics(4, 3)
        scene = build_scene(img, depth, [], K, CameraPose.identity())
        assert len(scene.background) == 12
        assert scene.objects == ()

    def test_4x4_two_masks_one_hole(self):
        # reference enumeration: every pixel is assigned to exactly one bucket
        h = w = 4
        img = flat_image(h, w)
        values = np.full((h, w), 3.0)
        validity = np.ones((h, w), dtype=bool)
        validity[0, 1] = False  # hole inside mask A
        depth = DepthMap(np.where(validity, values, 0.0), validity)
        mask_a = np.zeros((h, w), dtype=bool)
        mask_a[0, 0:3] = True  # 3 px, one of them the hole
        mask_b = np.zeros((h, w), dtype=bool)
        mask_b[2, 0:3] = True  # 3 px
        K = identity_intrinsics(w, h)
        scene = build_scene(
            img,
            depth,
            [InstanceMask("a", mask_a), InstanceMask("b", mask_b)],
            K,
            CameraPose.identity(),
        )
        # enumerate expectations pixel by pixel
        expected = {"a": 0, "b": 0, "bg": 0}
        for y in range(h):
            for x in range(w):
                if not validity[y, x]:
                    continue
                if mask_a[y, x]:
                    expected["a"] += 1
                elif mask_b[y, x]:
                    expected["b"] += 1
                else:
                    expected["bg"] += 1
        assert expected == {"a": 2, "b": 3, "bg": 10}
        by_id = scene.object_map()
        assert len(by_id["a"].cloud) == 2
        assert len(by_id["b"].cloud) == 3
        assert len(scene.background) == 10

    def test_partition_property(self, rng):
        for trial in range(10):
            h, w = int(rng.integers(4, 12)), int(rng.integers(4, 12))
            img = flat_image(h, w)
            validity = rng.random((h, w)) > 0.2
            if not validity.any():
                validity[0, 0] = True
            depth = DepthMap(np.where(validity, 2.0 + rng.random((h, w)), 0.0), validity)
            masks = []
            for k in range(int(rng.integers(0, 3))):
                px = rng.random((h, w)) > 0.7
                px[k, k] = True
                if (px & validity).any():
                    masks.append(InstanceMask(f"m{k}", px))
            # overlaps are allowed in the input; resolution keeps the partition
            K = centered_intrinsics(w, h)
            try:
                scene = build_scene(img, depth, masks, K, CameraPose.identity())
            except EmptyObjectError:
                continue
            total = len(scene.background) + sum(len(o.cloud) for o in scene.objects)
            assert total == int(validity.sum())

    def test_overlap_smaller_mask_wins(self):
        h = w = 4
        img = flat_image(h, w)
        depth = full_depth(h, w)
        big = np.zeros((h, w), dtype=bool)
        big[0:3, 0:3] = True  # 9 px
        small = np.zeros((h, w), dtype=bool)
        small[1, 1] = True  # 1 px, fully inside big
        K = identity_intrinsics(w, h)
        scene = build_scene(
            img, depth,
            [InstanceMask("big", big), InstanceMask("small", small)],
            K, CameraPose.identity(),
        )
        by_id = scene.object_map()
        assert len(by_id["small"].cloud) == 1
        assert len(by_id["big"].cloud) == 8

    def test_empty_object_error(self):
        img = flat_image(2, 2)
        values = np.zeros((2, 2))
        depth = DepthMap(values, np.zeros((2, 2), dtype=bool))
        mask = np.zeros((2, 2), dtype=bool)
        mask[0, 0] = True
        K = identity_intrinsics(2, 2)
        with pytest.raises(EmptyObjectError):
            build_scene(img, depth, [InstanceMask("a", mask)], K, CameraPose.identity())

    def test_shape_mismatch(self):
        img = flat_image(2, 3)
        depth = full_depth(2, 2)
        K = identity_intrinsics(2, 2)
        with pytest.raises(ShapeError):
            build_scene(img, depth, [], K, CameraPose.identity())

    def test_initial_gaussian_matches_cloud_fit(self):
        scene, *_ = make_scene(n_objects=1)
        obj = scene.objects[0]
        from ctrl4d.gaussians import fit_gaussian

        expected = fit_gaussian(obj.cloud.points)
        got = obj.trajectory.at(1)
        np.testing.assert_allclose(got.mean, expected.mean, atol=1e-12)
        np.testing.assert_allclose(got.cov, expected.cov, atol=1e-12)

    def test_world_points_match_backprojection(self):
        scene, image, depth, masks, K, pose = make_scene(n_objects=1)
        # every background point reprojects onto a valid, unmasked pixel
        from ctrl4d.camera import project

        claimed = masks[0].pixels
        for p in scene.background.points[:10]:
            pix, z = project(p, K, pose)
            col, row = int(round(pix[0])), int(round(pix[1]))
            assert depth.validity[row, col]
            assert not claimed[row, col]


class TestRenderBackground:
    def test_single_point_zero_radius(self):
        K = CameraIntrinsics(fx=10, fy=10, cx=3, cy=2, width=7, height=5)
        cloud = ColoredPointCloud(np.array([[0.0, 0, 2.0]]), np.array([[1.0, 0, 0]]))
        scene = SceneState(
            cloud, (), CameraTrack(K, (CameraPose.identity(),)),
            np.zeros((5, 7, 3), dtype=np.uint8),
        )
        rgb, dm = render_background_points(scene, 1, radius=0.0)
        assert dm.validity.sum() == 1
        assert dm.validity[2, 3]
        assert dm.values[2, 3] == 2.0
        np.testing.assert_allclose(rgb[2, 3], [1, 0, 0])

    def test_zbuffer_near_point_wins(self):
        K = CameraIntrinsics(fx=10, fy=10, cx=3, cy=2, width=7, height=5)
        cloud = ColoredPointCloud(
            np.array([[0.0, 0, 3.0], [0.0, 0, 2.0]]),
            np.array([[1.0, 0, 0], [0.0, 1.0, 0]]),
        )
        scene = SceneState(
            cloud, (), CameraTrack(K, (CameraPose.identity(),)),
            np.zeros((5, 7, 3), dtype=np.uint8),
        )
        rgb, dm = render_background_points(scene, 1, radius=0.0)
        assert dm.values[2, 3] == 2.0
        np.testing.assert_allclose(rgb[2, 3], [0, 1, 0])

    def test_frame_bounds(self):
        scene, *_ = make_scene()
        with pytest.raises(BoundsError):
            render_background_points(scene, 0)
        with pytest.raises(BoundsError):
            render_background_points(scene, 2)

    def test_against_brute_force(self, rng):
        w, h = 40, 30
        K = CameraIntrinsics(fx=35.0, fy=33.0, cx=w / 2, cy=h / 2, width=w, height=h)
        n = 2000
        z = rng.uniform(1.0, 20.0, n)
        x = (rng.uniform(0, w, n) - K.cx) / K.fx * z
        y = (rng.uniform(0, h, n) - K.cy) / K.fy * z
        pts = np.stack([x, y, z], 1)
        cols = rng.random((n, 3))
        rot = random_rotation(rng)
        tr = rng.normal(size=3) * 0.1
        pose = CameraPose(rot, tr)
        cloud = ColoredPointCloud(pts, cols)
        scene = SceneState(
            cloud, (), CameraTrack(K, (pose,)), np.zeros((h, w, 3), dtype=np.uint8)
        )
        rgb, dm = render_background_points(scene, 1, radius=0.05)
        exp_depth, exp_winner, exp_rgb = brute_force_splat(
            pts, cols, K.fx, K.fy, K.cx, K.cy, w, h, rot, tr, radius=0.05
        )
        np.testing.assert_array_equal(dm.validity, exp_winner >= 0)
        np.testing.assert_array_equal(dm.values, exp_depth.astype(np.float32))
        np.testing.assert_allclose(rgb, exp_rgb.astype(np.float32), atol=1e-7)

    def test_first_frame_render_reproduces_colors(self):
        # splat radius 0 from pose 1 puts every point back on its source pixel
        scene, image, depth, masks, K, pose = make_scene(n_objects=0)
        rgb, dm = render_background_points(scene, 1, radius=0.0)
        got = quantize_unit(rgb)
        assert dm.validity.all()
        np.testing.assert_array_equal(got, image)


class TestSceneStateInvariants:
    def test_trajectory_length_must_match_camera(self):
        scene, *_ = make_scene(n_objects=1)
        K = scene.camera.intrinsics
        two = CameraTrack(K, (CameraPose.identity(), CameraPose.identity()))
        with pytest.raises(ShapeError):
            SceneState(scene.background, scene.objects, two, scene.first_frame_image)

    def test_with_camera_reinterpolates(self):
        scene, *_ = make_scene(n_objects=1)
        K = scene.camera.intrinsics
        track = CameraTrack(K, (CameraPose.identity(),) * 5)
        scene5 = scene.with_camera(track)
        assert scene5.frame_count == 5
        assert scene5.objects[0].trajectory.frame_count == 5

    def test_with_keyframes_replaces_track(self):
        scene, *_ = make_scene(n_objects=1)
        oid = scene.objects[0].object_id
        g = Gaussian3(np.array([9.0, 9, 9]), np.eye(3))
        edited = scene.with_keyframes(oid, KeyframeTrack(((1, g),)))
        np.testing.assert_array_equal(edited.objects[0].trajectory.at(1).mean, g.mean)
        with pytest.raises(KeyError):
            scene.with_keyframes("nope", KeyframeTrack(((1, g),)))


class TestSceneSerialization:
    def test_roundtrip(self, tmp_path):
        scene, *_ = make_scene(n_objects=2)
        save_scene(scene, tmp_path / "scene")
        loaded = load_scene(tmp_path / "scene")
        assert loaded.frame_count == scene.frame_count
        assert len(loaded.background) == len(scene.background)
        np.testing.assert_array_equal(loaded.first_frame_image, scene.first_frame_image)
        assert [o.object_id for o in loaded.objects] == [o.object_id for o in scene.objects]
        for a, b in zip(scene.objects, loaded.objects):
            assert a.label == b.label
            np.testing.assert_allclose(a.cloud.points, b.cloud.points, atol=1e-6)
            np.testing.assert_allclose(
                a.trajectory.at(1).mean, b.trajectory.at(1).mean, atol=1e-12
            )
            np.testing.assert_allclose(a.color, b.color, atol=1e-12)
        for pa, pb in zip(scene.camera.poses, loaded.camera.poses):
            np.testing.assert_allclose(pa.rotation, pb.rotation, atol=1e-15)

    def test_colors_quantize_once(self, tmp_path):
        # PLY stores 8-bit colors; one round trip must be lossless afterwards
        scene, *_ = make_scene(n_objects=1)
        save_scene(scene, tmp_path / "s1")
        first = load_scene(tmp_path / "s1")
        save_scene(first, tmp_path / "s2")
        second = load_scene(tmp_path / "s2")
        np.testing.assert_array_equal(first.background.colors, second.background.colors)
