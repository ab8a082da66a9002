"""Procedural paths, trajectory smoothing, Plücker ray maps."""

from __future__ import annotations

import numpy as np
import pytest

from splat4d import (
    CameraPose,
    Intrinsics,
    PathKind,
    Trajectory,
    axis_angle_to_quat,
    make_path,
    plucker_map,
    project_point,
    smooth_trajectory,
    trajectory_jerk,
)
from conftest import identity_pose


def base_pose(time=0.0):
    return CameraPose(quat=axis_angle_to_quat([0.1, 0.2, -0.05]),
                      trans=[0.3, -0.2, 1.0], time=time)


K = Intrinsics(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=101, height=101)


class TestMakePath:
    def test_zero_magnitude_repeats_base(self):
        traj = make_path(PathKind.PAN_LEFT, base_pose(), 0.0, 5)
        assert len(traj) == 5
        np.testing.assert_array_equal(traj.times(), [0, 1, 2, 3, 4])
        for p in traj.poses:
            np.testing.assert_allclose(p.quat, base_pose().quat, atol=1e-12)
            np.testing.assert_allclose(p.trans, base_pose().trans, atol=1e-12)

    def test_move_right_then_left_returns_home(self):
        out = make_path(PathKind.MOVE_RIGHT, base_pose(), 1.5, 6)
        back = make_path(PathKind.MOVE_LEFT, out.poses[-1], 1.5, 6)
        final = back.poses[-1]
        np.testing.assert_allclose(final.trans, base_pose().trans, atol=1e-9)
        np.testing.assert_allclose(final.quat, base_pose().quat, atol=1e-9)

    def test_orbit_full_turn_closes(self):
        center = np.array([0.0, 0.0, 5.0])
        traj = make_path(PathKind.ORBIT, identity_pose(), 2 * np.pi, 13, center=center)
        first, last = traj.poses[0], traj.poses[-1]
        np.testing.assert_allclose(last.trans, first.trans, atol=1e-6)
        np.testing.assert_allclose(last.quat, first.quat, atol=1e-6)

    def test_pan_left_shifts_scene_right(self):
        # turning the camera left moves a fixed world point right in the image
        traj = make_path(PathKind.PAN_LEFT, identity_pose(), 0.3, 4)
        p = np.array([0.0, 0.0, 5.0])
        u0 = project_point(p, traj.poses[0], K)[0][0]
        u3 = project_point(p, traj.poses[-1], K)[0][0]
        assert u3 > u0

    def test_dolly_in_moves_along_optical_axis(self):
        traj = make_path(PathKind.DOLLY_IN, identity_pose(), 2.0, 3)
        np.testing.assert_allclose(traj.poses[-1].center(), [0, 0, 2.0], atol=1e-12)

    def test_orbit_at_center_rejected(self):
        with pytest.raises(ValueError, match="coincides"):
            make_path(PathKind.ORBIT, identity_pose(), 1.0, 4, center=[0.0, 0.0, 0.0])

    def test_frames_and_magnitude_validated(self):
        with pytest.raises(ValueError):
            make_path(PathKind.PAN_LEFT, base_pose(), 1.0, 1)
        with pytest.raises(ValueError):
            make_path(PathKind.PAN_LEFT, base_pose(), -1.0, 4)


class TestSmoothTrajectory:
    def make_jittered(self, seed=0, n=30, noise=0.08):
        rng = np.random.default_rng(seed)
        quat = axis_angle_to_quat([0.0, 0.1, 0.0])
        poses = []
        for i in range(n):
            center = np.array([0.2 * i, 0.05 * i, 0.0])
            center += rng.normal(0, noise, 3)
            poses.append(CameraPose.from_center(quat, center, float(i)))
        return Trajectory(tuple(poses), K)

    def test_window_one_is_identity(self):
        traj = self.make_jittered()
        assert smooth_trajectory(traj, 1) is traj

    def test_linear_path_is_fixed_point_in_interior(self):
        quat = axis_angle_to_quat([0.05, -0.1, 0.2])
        poses = tuple(CameraPose.from_center(quat, [0.3 * i, -0.1 * i, 0.02 * i], float(i))
                      for i in range(12))
        traj = Trajectory(poses, K)
        out = smooth_trajectory(traj, 5)
        for i in range(2, 10):  # interior: full window available
            np.testing.assert_allclose(out.poses[i].center(), traj.poses[i].center(),
                                       atol=1e-9)
            np.testing.assert_allclose(out.poses[i].quat, traj.poses[i].quat, atol=1e-9)

    def test_jerk_halves_on_jittered_path(self):
        traj = self.make_jittered(seed=3)
        out = smooth_trajectory(traj, 5)
        assert trajectory_jerk(out) <= 0.5 * trajectory_jerk(traj)

    def test_endpoint_drift_bounded(self):
        traj = self.make_jittered(seed=3)
        out = smooth_trajectory(traj, 5)
        centers = traj.centers()
        path_len = np.sum(np.linalg.norm(np.diff(centers, axis=0), axis=1))
        drift = max(np.linalg.norm(out.poses[0].center() - centers[0]),
                    np.linalg.norm(out.poses[-1].center() - centers[-1]))
        assert drift <= 0.1 * path_len

    def test_repeated_smoothing_contracts(self):
        traj = self.make_jittered(seed=9)
        var_prev = np.inf
        for _ in range(5):
            traj = smooth_trajectory(traj, 5)
            var = float(np.var(traj.centers(), axis=0).sum())
            assert var <= var_prev + 1e-12
            var_prev = var

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            smooth_trajectory(self.make_jittered(), 4)

    def test_times_and_unit_quats_preserved(self):
        traj = self.make_jittered(seed=5)
        out = smooth_trajectory(traj, 7)
        np.testing.assert_array_equal(out.times(), traj.times())
        for p in out.poses:
            assert abs(np.linalg.norm(p.quat) - 1.0) < 1e-9


class TestPluckerMap:
    def test_identity_pose_principal_ray(self):
        m = plucker_map(identity_pose(), K, K.width, K.height)
        assert m.shape == (101, 101, 6)
        np.testing.assert_allclose(m[50, 50, :3], [0, 0, 1], atol=1e-12)
        np.testing.assert_allclose(m[50, 50, 3:], [0, 0, 0], atol=1e-12)

    def test_incidence_and_unit_direction_everywhere(self):
        pose = base_pose()
        m = plucker_map(pose, K, 32, 32)
        d = m[..., :3]
        mom = m[..., 3:]
        np.testing.assert_allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-9)
        np.testing.assert_allclose(np.sum(d * mom, axis=-1), 0.0, atol=1e-9)

    def test_translation_along_ray_is_invariant(self):
        pose = base_pose()
        m = plucker_map(pose, K, K.width, K.height)
        u, v = 70, 20
        d = m[v, u, :3]
        moved = CameraPose.from_center(pose.quat, pose.center() + 2.5 * d, pose.time)
        m2 = plucker_map(moved, K, K.width, K.height)
        np.testing.assert_allclose(m2[v, u], m[v, u], atol=1e-9)

    def test_rescales_for_other_resolutions(self):
        m = plucker_map(identity_pose(), K, 202, 202)
        assert m.shape == (202, 202, 6)
        # doubled resolution keeps the principal ray at the doubled center
        np.testing.assert_allclose(m[100, 100, :3], [0, 0, 1], atol=1e-12)
