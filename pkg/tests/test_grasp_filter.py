import numpy as np
import pytest

from cogrip.errors import BehindCamera, DegeneratePatch, NoValidPose
from cogrip.grasp_filter import (
    CameraIntrinsics,
    GraspPose,
    filter_poses,
    project_direction,
    project_point,
    quat_to_matrix,
    rotation_correction,
)

CAM = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0)


def pose_at(x, y, z, score=0.5, rotation=(1.0, 0.0, 0.0, 0.0)):
    return GraspPose(position=(x, y, z), rotation=rotation, width=0.04, depth=0.02, score=score)


def pose_at_pixel(u, v, cam=CAM, z=1.0, score=0.5):
    return pose_at((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z, score=score)


class TestProjectPoint:
    def test_optical_axis_hits_principal_point(self):
        assert project_point(CAM, (0.0, 0.0, 1.0)) == (320.0, 240.0)

    def test_direct_pinhole_arithmetic(self):
        cam = CameraIntrinsics(fx=500.0, fy=500.0, cx=0.0, cy=0.0)
        assert project_point(cam, (0.1, 0.2, 1.0)) == pytest.approx((50.0, 100.0), abs=1e-12)

    def test_behind_camera(self):
        with pytest.raises(BehindCamera):
            project_point(CAM, (0.0, 0.0, -0.5))
        with pytest.raises(BehindCamera):
            project_point(CAM, (0.1, 0.1, 0.0))

    def test_back_projection_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.2, 3.0)])
            u, v = project_point(CAM, p)
            back = np.array([(u - CAM.cx) * p[2] / CAM.fx, (v - CAM.cy) * p[2] / CAM.fy, p[2]])
            assert np.linalg.norm(back - p) < 1e-9


def brute_force_filter(poses, cog_pixel, mask, cam, radius):
    """Independent loop evaluation of the three selection rules."""
    survivors = []
    for i, pose in enumerate(poses):
        if pose.position[2] <= 0:
            continue
        u, v = project_point(cam, pose.position)
        ui, vi = int(round(u)), int(round(v))
        h, w = mask.shape
        if not (0 <= ui < w and 0 <= vi < h and mask[vi, ui]):
            continue
        survivors.append((i, np.hypot(u - cog_pixel[0], v - cog_pixel[1])))
    if not survivors:
        return None
    in_ball = [s for s in survivors if s[1] <= radius]
    if in_ball:
        return max(in_ball, key=lambda s: (poses[s[0]].score, -s[0]))[0]
    return min(survivors, key=lambda s: (s[1], -poses[s[0]].score, s[0]))[0]


class TestFilterPoses:
    def setup_method(self):
        self.mask = np.zeros((480, 640), dtype=bool)
        self.mask[200:280, 250:400] = True
        self.cog = (320.0, 240.0)

    def test_single_in_mask_pose_selected_regardless_of_distance(self):
        far = pose_at_pixel(395, 275)
        sel = filter_poses([far], self.cog, self.mask, CAM, radius_px=20)
        assert sel.pose is far

    def test_worked_example_radius_25_picks_higher_score(self):
        a = pose_at_pixel(325, 240, score=0.4)  # distance 5
        b = pose_at_pixel(340, 240, score=0.9)  # distance 20
        sel = filter_poses([a, b], self.cog, self.mask, CAM, radius_px=25)
        assert sel.pose is b

    def test_worked_example_radius_10_picks_closer(self):
        a = pose_at_pixel(325, 240, score=0.4)
        b = pose_at_pixel(340, 240, score=0.9)
        sel = filter_poses([a, b], self.cog, self.mask, CAM, radius_px=10)
        assert sel.pose is a

    def test_no_valid_pose(self):
        outside = pose_at_pixel(10, 10)
        behind = pose_at(0.0, 0.0, -1.0)
        with pytest.raises(NoValidPose):
            filter_poses([outside, behind], self.cog, self.mask, CAM)

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            mask = rng.random((48, 64)) < 0.4
            cam = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0)
            cog = (float(rng.uniform(0, 63)), float(rng.uniform(0, 47)))
            poses = [
                pose_at(
                    float(rng.uniform(-0.4, 0.4)),
                    float(rng.uniform(-0.3, 0.3)),
                    float(rng.uniform(0.5, 2.0)) * (1 if rng.random() > 0.1 else -1),
                    score=round(float(rng.random()), 3),
                )
                for _ in range(int(rng.integers(1, 12)))
            ]
            radius = float(rng.uniform(2, 30))
            expected = brute_force_filter(poses, cog, mask, cam, radius)
            if expected is None:
                with pytest.raises(NoValidPose):
                    filter_poses(poses, cog, mask, cam, radius)
            else:
                sel = filter_poses(poses, cog, mask, cam, radius)
                assert sel.pose is poses[expected]

    def test_adding_out_of_mask_pose_never_changes_selection(self):
        a = pose_at_pixel(325, 240, score=0.4)
        b = pose_at_pixel(340, 240, score=0.9)
        out = pose_at_pixel(5, 5, score=1.0)
        base = filter_poses([a, b], self.cog, self.mask, CAM, radius_px=25)
        with_out = filter_poses([a, out, b], self.cog, self.mask, CAM, radius_px=25)
        assert base.pose is with_out.pose


def bar_mask(angle_deg, size=201, length=80.3, halfwidth=6.3):
    """Rasterized bar through the image center at the given angle."""
    c = (size - 1) / 2
    vs, us = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    du, dv = us - c, vs - c
    t = np.deg2rad(angle_deg)
    along = du * np.cos(t) + dv * np.sin(t)
    across = -du * np.sin(t) + dv * np.cos(t)
    return (np.abs(along) <= length) & (np.abs(across) <= halfwidth)


def closing_axis_image_angle(pose, cam):
    d = project_direction(cam, pose.position, quat_to_matrix(pose.rotation)[:, 1])
    return np.rad2deg(np.arctan2(d[1], d[0])) % 180.0


def angdiff(a, b):
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)


class TestRotationCorrection:
    cam = CameraIntrinsics(fx=400.0, fy=400.0, cx=100.0, cy=100.0)
    center_pose = pose_at(0.0, 0.0, 1.0)  # projects to (100, 100)

    @pytest.mark.parametrize("bar_angle", [0.0, 45.0, 90.0])
    def test_closing_axis_ends_perpendicular_to_bar(self, bar_angle):
        mask = bar_mask(bar_angle)
        corrected, did = rotation_correction(self.center_pose, mask, (100, 100), self.cam)
        assert did
        got = closing_axis_image_angle(corrected, self.cam)
        # eigen-decomposition oracle: minor axis of the bar's pixel covariance
        vs, us = np.nonzero(mask)
        pts = np.stack([us, vs], axis=1).astype(float)
        eigvals, eigvecs = np.linalg.eigh(np.cov(pts.T))
        minor = eigvecs[:, 0]
        oracle = np.rad2deg(np.arctan2(minor[1], minor[0])) % 180.0
        assert angdiff(got, oracle) < 1.0
        assert angdiff(got, bar_angle + 90.0) < 1.0

    def test_horizontal_bar_from_horizontal_closing_axis(self):
        mask = bar_mask(0.0)
        # closing axis initially horizontal: rotate local frame -90 deg about z
        q = (np.cos(-np.pi / 4), 0.0, 0.0, np.sin(-np.pi / 4))
        pose = pose_at(0.0, 0.0, 1.0, rotation=q)
        assert angdiff(closing_axis_image_angle(pose, self.cam), 0.0) < 1e-6
        corrected, did = rotation_correction(pose, mask, (100, 100), self.cam)
        assert did
        assert angdiff(closing_axis_image_angle(corrected, self.cam), 90.0) < 1.0

    def test_isotropic_patch_unchanged(self):
        size = 201
        vs, us = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        disk = (us - 100) ** 2 + (vs - 100) ** 2 <= 40**2
        corrected, did = rotation_correction(self.center_pose, disk, (100, 100), self.cam)
        assert not did
        assert corrected is self.center_pose

    def test_idempotent(self):
        mask = bar_mask(45.0)
        once, _ = rotation_correction(self.center_pose, mask, (100, 100), self.cam)
        twice, _ = rotation_correction(once, mask, (100, 100), self.cam)
        q1, q2 = np.array(once.rotation), np.array(twice.rotation)
        assert min(np.linalg.norm(q1 - q2), np.linalg.norm(q1 + q2)) < 1e-9

    def test_degenerate_patch(self):
        mask = np.zeros((50, 50), dtype=bool)
        mask[25, 25] = True
        with pytest.raises(DegeneratePatch):
            rotation_correction(pose_at(0.0, 0.0, 1.0), mask, (25, 25), CameraIntrinsics(1.0, 1.0, 25.0, 25.0))

    def test_off_axis_pose_still_aligns(self):
        # grasp point away from the principal point exercises the projection
        # Jacobian's cross term
        mask = bar_mask(30.0)
        pose = pose_at(0.1, 0.06, 0.9)
        uv = project_point(self.cam, pose.position)
        big = np.zeros((401, 401), dtype=bool)
        sub = bar_mask(30.0, size=151, length=60, halfwidth=5)
        v0, u0 = int(round(uv[1])) - 75, int(round(uv[0])) - 75
        big[v0 : v0 + 151, u0 : u0 + 151] = sub
        corrected, did = rotation_correction(pose, big, uv, self.cam)
        assert did
        got = closing_axis_image_angle(corrected, self.cam)
        # the analyzed patch is a 31x31 window, so its rasterized minor axis
        # (the eigen oracle) is the exact target; nominal 120 deg only loosely
        ui, vi = int(round(uv[0])), int(round(uv[1]))
        patch = big[vi - 15 : vi + 16, ui - 15 : ui + 16]
        pvs, pus = np.nonzero(patch)
        pts = np.stack([pus, pvs], axis=1).astype(float)
        _, eigvecs = np.linalg.eigh(np.cov(pts.T))
        minor = eigvecs[:, 0]
        oracle = np.rad2deg(np.arctan2(minor[1], minor[0])) % 180.0
        assert angdiff(got, oracle) < 1.0
        assert angdiff(got, 120.0) < 5.0
