"""Camera path utilities: procedural paths, smoothing, Plücker ray maps."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    Array,
    CameraPose,
    Intrinsics,
    axis_angle_to_quat,
    quat_from_rotmat,
    quat_mul,
    quat_normalize,
    quat_to_rotmat,
)


@dataclass(frozen=True)
class Trajectory:
    """Ordered camera poses with strictly increasing timestamps."""

    poses: tuple
    intrinsics: Intrinsics

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if len(self.poses) == 0:
            raise ValueError("a trajectory needs at least one pose")
        times = self.times()
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    def times(self) -> Array:
        return np.array([p.time for p in self.poses])

    def centers(self) -> Array:
        return np.stack([p.center() for p in self.poses])

    def __len__(self) -> int:
        return len(self.poses)


class PathKind(Enum):
    PAN_LEFT = "pan_left"
    PAN_RIGHT = "pan_right"
    MOVE_LEFT = "move_left"
    MOVE_RIGHT = "move_right"
    ORBIT = "orbit"
    DOLLY_IN = "dolly_in"
    DOLLY_OUT = "dolly_out"


def _rotate_pose(base: CameraPose, axis_world: Array, angle: float,
                 pivot: Array | None, time: float) -> CameraPose:
    """Rotate the camera rig by `angle` about a world axis, optionally
    revolving its center about `pivot`."""
    q_delta = axis_angle_to_quat(np.asarray(axis_world) * angle)
    Q = quat_to_rotmat(q_delta)
    R = base.rotation()
    R_new = R @ Q.T
    o = base.center()
    if pivot is not None:
        o = np.asarray(pivot) + Q @ (o - np.asarray(pivot))
    q_new = quat_from_rotmat(R_new)
    return CameraPose.from_center(q_new, o, time)


def make_path(kind: PathKind, base: CameraPose, magnitude: float, frames: int,
              center: Array | None = None, dt: float = 1.0,
              intrinsics: Intrinsics | None = None) -> Trajectory:
    """Generate a smooth parametric camera path starting at `base`.

    Pans rotate about the camera's up axis and orbits revolve about
    `center` (both by `magnitude` radians in total); moves translate along
    the camera's right axis and dollies along the optical axis (by
    `magnitude` world units). Timestamps advance by `dt` per frame.
    """
    if frames < 2:
        raise ValueError("frames must be >= 2")
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    if intrinsics is None:
        intrinsics = Intrinsics(100.0, 100.0, 50.0, 50.0, 101, 101)

    R = base.rotation()
    right, down, forward = R[0], R[1], R[2]
    up = -down
    o0 = base.center()

    if kind is PathKind.ORBIT:
        if center is None:
            raise ValueError("orbit requires a center")
        if np.linalg.norm(o0 - np.asarray(center)) < 1e-9:
            raise ValueError("orbit base pose coincides with the orbit center")

    poses = []
    for j in range(frames):
        s = magnitude * j / (frames - 1)
        time = base.time + j * dt
        if j == 0:
            poses.append(CameraPose(base.quat, base.trans, time))
            continue
        if kind is PathKind.PAN_LEFT:
            poses.append(_rotate_pose(base, up, s, None, time))
        elif kind is PathKind.PAN_RIGHT:
            poses.append(_rotate_pose(base, up, -s, None, time))
        elif kind is PathKind.MOVE_LEFT:
            poses.append(CameraPose.from_center(base.quat, o0 - s * right, time))
        elif kind is PathKind.MOVE_RIGHT:
            poses.append(CameraPose.from_center(base.quat, o0 + s * right, time))
        elif kind is PathKind.ORBIT:
            poses.append(_rotate_pose(base, up, s, center, time))
        elif kind is PathKind.DOLLY_IN:
            poses.append(CameraPose.from_center(base.quat, o0 + s * forward, time))
        elif kind is PathKind.DOLLY_OUT:
            poses.append(CameraPose.from_center(base.quat, o0 - s * forward, time))
        else:
            raise ValueError(f"unknown path kind {kind}")
    return Trajectory(tuple(poses), intrinsics)


def smooth_trajectory(traj: Trajectory, window: int) -> Trajectory:
    """Box-average camera centers and orientations over an odd window.

    The window is clipped at the ends of the path. Orientations use a
    sign-aligned normalized quaternion mean (adequate for the small
    angular spreads of stabilization; not a full rotation average).
    Timestamps are preserved; window = 1 returns the input unchanged.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    if window == 1:
        return traj
    half = window // 2
    n = len(traj.poses)
    centers = traj.centers()
    quats = np.stack([p.quat for p in traj.poses])
    new_poses = []
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        o = centers[lo:hi].mean(axis=0)
        qc = quats[i]
        block = quats[lo:hi]
        signs = np.where(block @ qc < 0, -1.0, 1.0)
        q = quat_normalize((block * signs[:, None]).sum(axis=0))
        new_poses.append(CameraPose.from_center(q, o, traj.poses[i].time))
    return Trajectory(tuple(new_poses), traj.intrinsics)


def trajectory_jerk(traj: Trajectory) -> float:
    """Norm of the second differences of camera centers (stability measure)."""
    c = traj.centers()
    if len(c) < 3:
        return 0.0
    return float(np.linalg.norm(np.diff(c, n=2, axis=0)))


def plucker_map(pose: CameraPose, K: Intrinsics, width: int, height: int) -> Array:
    """Per-pixel world rays as (H, W, 6) Plücker coordinates (d, o × d).

    `d` is the unit ray direction through the pixel center and `o` the
    camera origin in world coordinates, so <d, o × d> = 0 everywhere.
    Intrinsics are rescaled proportionally if width/height differ from
    their native size.
    """
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    if (width, height) != (K.width, K.height):
        K = K.scaled(width, height)
    us = np.arange(width, dtype=np.float64)
    vs = np.arange(height, dtype=np.float64)
    x = (us[None, :] - K.cx) / K.fx
    y = (vs[:, None] - K.cy) / K.fy
    d_cam = np.stack([np.broadcast_to(x, (height, width)),
                      np.broadcast_to(y, (height, width)),
                      np.ones((height, width))], axis=-1)
    d_cam /= np.linalg.norm(d_cam, axis=-1, keepdims=True)
    R = pose.rotation()
    d_world = d_cam @ R  # each ray through R^T
    o = pose.center()
    moment = np.cross(np.broadcast_to(o, d_world.shape), d_world)
    return np.concatenate([d_world, moment], axis=-1)
