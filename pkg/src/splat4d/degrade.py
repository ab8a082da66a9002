"""Monocular degradation simulation.

Reproduces the artifact patterns a renderer shows after viewpoint change:
occlusion holes (cull Gaussians invisible from a perturbed camera, then
re-render the original view) and flying edge pixels / distortion (box
filter a novel-view depth map and pull Gaussians to the filtered depth
along their novel-view rays). The per-frame outputs bundle degraded RGB,
depth, a binary observed-region mask, and the original-trajectory ray
embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import (
    Array,
    CameraPose,
    GaussianCloud,
    Intrinsics,
    Scene,
    axis_angle_to_quat,
    project_points,
    quat_from_rotmat,
    quat_mul,
    slerp,
)
from .dynamics import InterpConfig, interpolate_field
from .raster import RenderOptions, RenderTarget, binarize_mask, render
from .sceneio import write_depth, write_image, write_mask
from .trajectory import Trajectory, plucker_map

_FILTER_ACC_MIN = 1e-3  # pixels below this opacity don't vote in the depth filter


@dataclass(frozen=True)
class PerturbConfig:
    """Random trajectory transform: positional offset of norm up to
    max_translation, orientation re-aimed toward the scene center by
    lookat_blend then tilted by up to max_rotation. Fully determined by
    the seed."""

    max_translation: float = 0.25
    max_rotation: float = 0.05
    lookat_blend: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_translation < 0 or self.max_rotation < 0:
            raise ValueError("perturbation magnitudes must be >= 0")
        if not 0.0 <= self.lookat_blend <= 1.0:
            raise ValueError("lookat_blend must be in [0, 1]")


class DegradationMode(Enum):
    CULLING = "cull"
    FILTER = "filter"
    BOTH = "both"


@dataclass
class DegradationPack:
    """Per-frame degraded renders plus original-trajectory ray maps."""

    rgb: list
    depth: list
    mask: list
    plucker: list
    novel_trajectory: Trajectory
    culled_counts: list
    mean_displacement: float


def scene_center(gaussians) -> Array:
    """Per-axis median of Gaussian centers (robust to far outliers)."""
    cloud = GaussianCloud.coerce(gaussians)
    if len(cloud) == 0:
        raise ValueError("scene center of an empty Gaussian set is undefined")
    return np.median(cloud.mu, axis=0)


def _lookat_quat(position: Array, target: Array, down_hint: Array) -> Array:
    """World-to-camera rotation whose optical axis points from position
    to target, keeping the image 'down' direction near down_hint."""
    forward = target - position
    dist = np.linalg.norm(forward)
    if dist < 1e-6:
        raise ValueError("camera position coincides with the look-at target")
    forward = forward / dist
    right = np.cross(down_hint, forward)
    n = np.linalg.norm(right)
    if n < 1e-9:
        # degenerate hint (aligned with forward): pick any perpendicular
        helper = np.array([1.0, 0.0, 0.0])
        if abs(forward[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        right = np.cross(helper, forward)
        n = np.linalg.norm(right)
    right = right / n
    down = np.cross(forward, right)
    return quat_from_rotmat(np.stack([right, down, forward]))


def _unit_vector(rng: np.random.Generator) -> Array:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def perturb_trajectory(traj: Trajectory, center: Array,
                       cfg: PerturbConfig) -> Trajectory:
    """Seeded random transform of a trajectory that keeps cameras roughly
    aimed at `center`. Timestamps are unchanged; the same seed always
    produces the same output, independent of evaluation order (random
    streams are derived per frame index)."""
    center = np.asarray(center, dtype=np.float64)
    identity = (cfg.max_translation == 0.0 and cfg.max_rotation == 0.0
                and cfg.lookat_blend == 0.0)
    new_poses = []
    for f, pose in enumerate(traj.poses):
        if identity:
            new_poses.append(pose)
            continue
        rng = np.random.default_rng([cfg.seed, f])
        offset = _unit_vector(rng) * rng.uniform(0.0, cfg.max_translation)
        o_new = pose.center() + offset
        if np.linalg.norm(center - o_new) < 1e-6:
            raise ValueError(
                f"perturbed camera {f} coincides with the scene center; "
                "look-at is undefined"
            )
        q = pose.quat
        if cfg.lookat_blend > 0.0:
            q_look = _lookat_quat(o_new, center, pose.rotation()[1])
            q = slerp(pose.quat, q_look, cfg.lookat_blend)
        if cfg.max_rotation > 0.0:
            tilt = _unit_vector(rng) * rng.uniform(0.0, cfg.max_rotation)
            q = quat_mul(axis_angle_to_quat(tilt), q)
        new_poses.append(CameraPose.from_center(q, o_new, pose.time))
    return Trajectory(tuple(new_poses), traj.intrinsics)


# ---------------------------------------------------------------------------
# visibility culling
# ---------------------------------------------------------------------------

def _visibility_mask(cloud: GaussianCloud, target: RenderTarget, pose: CameraPose,
                     K: Intrinsics, opts: RenderOptions, eps_rel: float) -> Array:
    """True for Gaussians whose center is in-frame, within (near, far),
    and not behind the rendered depth by more than the relative tolerance."""
    if (opts.width, opts.height) != (K.width, K.height):
        K = K.scaled(opts.width, opts.height)
    pix, depth = project_points(cloud.mu, pose, K)
    ui = np.round(pix[:, 0]).astype(np.int64)
    vi = np.round(pix[:, 1]).astype(np.int64)
    in_frame = (ui >= 0) & (ui < opts.width) & (vi >= 0) & (vi < opts.height)
    in_depth = (depth > opts.near) & (depth < opts.far)
    visible = in_frame & in_depth
    idx = np.flatnonzero(visible)
    surf = target.depth[vi[idx], ui[idx]]
    visible[idx] = depth[idx] <= surf * (1.0 + eps_rel)
    return visible


def cull_invisible(gaussians, novel_poses, K: Intrinsics, eps_rel: float = 0.01,
                   opts: RenderOptions | None = None) -> tuple:
    """Partition Gaussians into (kept, culled) index sets by visibility.

    A Gaussian is kept if it is visible from at least one of the novel
    poses, judged against a depth render of the full set from that pose
    with relative tolerance eps_rel.
    """
    if eps_rel <= 0:
        raise ValueError("eps_rel must be > 0")
    poses = list(novel_poses)
    if not poses:
        raise ValueError("cull_invisible needs at least one novel pose")
    cloud = GaussianCloud.coerce(gaussians)
    if opts is None:
        opts = RenderOptions.native(K)
    visible_any = np.zeros(len(cloud), dtype=bool)
    for pose in poses:
        target = render(cloud, pose, K, opts)
        visible_any |= _visibility_mask(cloud, target, pose, K, opts, eps_rel)
    kept = np.flatnonzero(visible_any)
    culled = np.flatnonzero(~visible_any)
    return kept, culled


# ---------------------------------------------------------------------------
# average geometry filter
# ---------------------------------------------------------------------------

def _box_filter_valid(depth: Array, valid: Array, kernel: int) -> tuple:
    """Mean of `depth` over each clipped kernel window, counting only
    valid pixels. Returns (filtered, counts); filtered is 0 where a
    window holds no valid pixel. Uses integral images, so the window
    clipping at borders is exact."""
    h, w = depth.shape
    half = kernel // 2
    d = np.where(valid, depth, 0.0)
    sums = np.zeros((h + 1, w + 1))
    cnts = np.zeros((h + 1, w + 1))
    np.cumsum(np.cumsum(d, axis=0), axis=1, out=sums[1:, 1:])
    np.cumsum(np.cumsum(valid.astype(np.float64), axis=0), axis=1, out=cnts[1:, 1:])

    r0 = np.clip(np.arange(h) - half, 0, h)
    r1 = np.clip(np.arange(h) + half + 1, 0, h)
    c0 = np.clip(np.arange(w) - half, 0, w)
    c1 = np.clip(np.arange(w) + half + 1, 0, w)

    def window(total):
        return (total[r1[:, None], c1[None, :]] - total[r0[:, None], c1[None, :]]
                - total[r1[:, None], c0[None, :]] + total[r0[:, None], c0[None, :]])

    wsum = window(sums)
    wcnt = window(cnts)
    filtered = np.where(wcnt > 0, wsum / np.where(wcnt > 0, wcnt, 1.0), 0.0)
    return filtered, wcnt


def average_geometry_filter(gaussians, novel_pose: CameraPose, K: Intrinsics,
                            kernel: int, eps_rel: float = 0.01,
                            opts: RenderOptions | None = None) -> GaussianCloud:
    """Pull visible Gaussians to the box-filtered novel-view depth.

    The novel-view depth map is averaged over a kernel x kernel window
    (clipped at image borders; only pixels with accumulated opacity
    >= 1e-3 vote). Each Gaussian visible from the novel pose moves along
    its own novel-camera ray until its camera depth equals the filtered
    depth at its pixel, which preserves its projected position. Invisible
    Gaussians and all non-position attributes are untouched.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError("kernel must be odd and >= 1")
    cloud = GaussianCloud.coerce(gaussians)
    if opts is None:
        opts = RenderOptions.native(K)
    if len(cloud) == 0:
        return cloud

    target = render(cloud, novel_pose, K, opts)
    valid = target.acc_opacity >= _FILTER_ACC_MIN
    filtered, counts = _box_filter_valid(target.depth, valid, kernel)

    K_eff = K if (opts.width, opts.height) == (K.width, K.height) else K.scaled(opts.width, opts.height)
    visible = _visibility_mask(cloud, target, novel_pose, K_eff, opts, eps_rel)
    pix, depth = project_points(cloud.mu, novel_pose, K_eff)
    idx = np.flatnonzero(visible)
    if idx.size == 0:
        return cloud
    ui = np.round(pix[idx, 0]).astype(np.int64)
    vi = np.round(pix[idx, 1]).astype(np.int64)
    new_depth = filtered[vi, ui]
    movable = counts[vi, ui] > 0
    idx = idx[movable]
    if idx.size == 0:
        return cloud
    ratio = new_depth[movable] / depth[idx]

    origin = novel_pose.center()
    mu = cloud.mu.copy()
    mu[idx] = origin + (mu[idx] - origin) * ratio[:, None]
    return cloud.replace(mu=mu)


# ---------------------------------------------------------------------------
# full simulation
# ---------------------------------------------------------------------------

def simulate_degradation(scene: Scene, original_traj: Trajectory, cfg: PerturbConfig,
                         kernel: int = 3, mode: DegradationMode = DegradationMode.BOTH,
                         eps_rel: float = 0.01, interp: InterpConfig | None = None,
                         opts: RenderOptions | None = None) -> DegradationPack:
    """Simulate degraded renderings along a trajectory.

    Per frame: interpolate the Gaussian field at the frame's timestamp,
    degrade it with respect to the perturbed (novel) pose — culling and/or
    depth filtering per `mode`, culling first — then render the modified
    Gaussians back into the ORIGINAL pose. Masks binarize accumulated
    opacity at 0.5. Deterministic under a fixed seed.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError("kernel must be odd and >= 1")
    K = original_traj.intrinsics
    if opts is None:
        opts = RenderOptions.native(K)
    if interp is None:
        interp = InterpConfig()
    t_lo, t_hi = scene.time_range()
    for pose in original_traj.poses:
        if not t_lo <= pose.time <= t_hi:
            raise ValueError(
                f"trajectory time {pose.time} outside scene range [{t_lo}, {t_hi}]"
            )

    all_mu = np.concatenate([kf.gaussians.mu for kf in scene.keyframes])
    center = np.median(all_mu, axis=0)
    novel = perturb_trajectory(original_traj, center, cfg)

    rgb_frames, depth_frames, mask_frames, plucker_frames = [], [], [], []
    culled_counts = []
    displacement_sum = 0.0
    displacement_n = 0
    for f, orig_pose in enumerate(original_traj.poses):
        field = interpolate_field(scene, orig_pose.time, interp)
        novel_pose = novel.poses[f]
        if mode in (DegradationMode.CULLING, DegradationMode.BOTH):
            kept, culled = cull_invisible(field, [novel_pose], K, eps_rel, opts)
            culled_counts.append(int(culled.size))
            field = field.take(kept)
        else:
            culled_counts.append(0)
        if mode in (DegradationMode.FILTER, DegradationMode.BOTH):
            moved = average_geometry_filter(field, novel_pose, K, kernel, eps_rel, opts)
            disp = np.linalg.norm(moved.mu - field.mu, axis=1)
            displacement_sum += float(disp.sum())
            displacement_n += len(field)
            field = moved
        target = render(field, orig_pose, K, opts)
        rgb_frames.append(target.rgb)
        depth_frames.append(target.depth)
        mask_frames.append(binarize_mask(target.acc_opacity, 0.5))
        plucker_frames.append(plucker_map(orig_pose, K, opts.width, opts.height))

    return DegradationPack(
        rgb=rgb_frames,
        depth=depth_frames,
        mask=mask_frames,
        plucker=plucker_frames,
        novel_trajectory=novel,
        culled_counts=culled_counts,
        mean_displacement=(displacement_sum / displacement_n) if displacement_n else 0.0,
    )


def write_degradation_pack(directory, pack: DegradationPack) -> Path:
    """Write a pack as numbered image/depth/mask/ray files plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames = []
    for f in range(len(pack.rgb)):
        names = {
            "rgb": f"rgb_{f:04d}.png",
            "depth": f"depth_{f:04d}.pfm",
            "mask": f"mask_{f:04d}.png",
            "plucker": f"plucker_{f:04d}.npy",
        }
        write_image(directory / names["rgb"], pack.rgb[f])
        write_depth(directory / names["depth"], pack.depth[f])
        write_mask(directory / names["mask"], pack.mask[f])
        np.save(directory / names["plucker"], pack.plucker[f])
        names["time"] = pack.novel_trajectory.poses[f].time
        frames.append(names)
    manifest = {
        "format": "splat4d-degradation-pack",
        "version": 1,
        "frames": frames,
        "culled_counts": pack.culled_counts,
        "mean_displacement": pack.mean_displacement,
    }
    path = directory / "pack.json"
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(manifest, fp, indent=2, allow_nan=False)
        fp.write("\n")
    return path
