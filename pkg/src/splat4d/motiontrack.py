"""Global motion tracking and static/dynamic separation.

A Gaussian's motion score is the maximum, over every keyframe where it is
visible, of the composited velocity magnitude sampled at its projected
pixel. Taking the maximum over the whole clip (instead of one frame's
instantaneous velocity) catches objects that move during only part of
the clip; gating by visibility keeps occluded samples from contributing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    Array,
    CameraPose,
    Gaussian4D,
    Intrinsics,
    Scene,
    project_point,
    project_points,
)
from .dynamics import transfer_cloud
from .raster import RenderOptions, RenderTarget, render


@dataclass
class SeparationResult:
    """Per-keyframe partition into static/dynamic index sets plus the
    motion scores that produced it. per_frame optionally retains the
    (gaussian, frame) score matrix for diagnostics."""

    static_ids: list
    dynamic_ids: list
    m: list
    eta: float
    per_frame: list | None = None


def frame_velocity_magnitude(g: Gaussian4D, frame_render: RenderTarget,
                             pose: CameraPose, K: Intrinsics,
                             eps_rel: float = 0.01) -> float:
    """Velocity magnitude one frame contributes to a Gaussian's score.

    Projects the center into the frame; if the pixel is out of frame, the
    depth non-positive, or the center lies behind the rendered surface by
    more than the relative tolerance, the Gaussian is invisible there and
    contributes 0. Otherwise returns the larger of the forward/backward
    composited velocity magnitudes at the nearest pixel.
    """
    pix, depth = project_point(g.mu, pose, K)
    u, v = int(np.round(pix[0])), int(np.round(pix[1]))
    h, w = frame_render.depth.shape
    if depth <= 0 or not (0 <= u < w and 0 <= v < h):
        return 0.0
    if depth > frame_render.depth[v, u] * (1.0 + eps_rel):
        return 0.0
    vf = float(np.linalg.norm(frame_render.vel_fwd[v, u]))
    vb = float(np.linalg.norm(frame_render.vel_bwd[v, u]))
    return max(vf, vb)


def _frame_renders(scene: Scene, opts: RenderOptions) -> list:
    """One render per keyframe: its own Gaussians from its own camera."""
    return [render(kf.gaussians, kf.camera, scene.intrinsics, opts)
            for kf in scene.keyframes]


def global_motion(scene: Scene, eps_rel: float = 0.01,
                  return_per_frame: bool = False,
                  opts: RenderOptions | None = None):
    """Per-Gaussian motion scores, maxed over all keyframes of the scene.

    Every Gaussian of every keyframe is transferred to each frame time
    (linear position + rotation transfer) before projection, then scored
    against that frame's full-scene render. Returns a list with one score
    array per keyframe, optionally paired with the per-frame score
    matrices.
    """
    if opts is None:
        opts = RenderOptions.native(scene.intrinsics)
    renders = _frame_renders(scene, opts)
    times = scene.times()
    h, w = opts.height, opts.width

    m_per_keyframe = []
    per_frame_all = []
    for k, kf in enumerate(scene.keyframes):
        cloud = kf.gaussians
        n = len(cloud)
        scores = np.zeros((n, len(times)))
        for t_idx, t in enumerate(times):
            moved = transfer_cloud(cloud, float(times[k]), float(t))
            pix, depth = project_points(
                moved.mu, scene.keyframes[t_idx].camera, scene.intrinsics)
            ui = np.round(pix[:, 0]).astype(np.int64)
            vi = np.round(pix[:, 1]).astype(np.int64)
            visible = (depth > 0) & (ui >= 0) & (ui < w) & (vi >= 0) & (vi < h)
            idx = np.flatnonzero(visible)
            if idx.size == 0:
                continue
            buf = renders[t_idx]
            surf = buf.depth[vi[idx], ui[idx]]
            occluded = depth[idx] > surf * (1.0 + eps_rel)
            idx = idx[~occluded]
            if idx.size == 0:
                continue
            vf = np.linalg.norm(buf.vel_fwd[vi[idx], ui[idx]], axis=1)
            vb = np.linalg.norm(buf.vel_bwd[vi[idx], ui[idx]], axis=1)
            scores[idx, t_idx] = np.maximum(vf, vb)
        m_per_keyframe.append(scores.max(axis=1) if len(times) else np.zeros(n))
        per_frame_all.append(scores)
    if return_per_frame:
        return m_per_keyframe, per_frame_all
    return m_per_keyframe


def default_eta(scene: Scene) -> float:
    """Scale-adaptive separation threshold: 1% of the scene bounding-box
    diagonal per frame interval."""
    return 0.01 * scene.diagonal()


def separate(scene: Scene, eta: float, eps_rel: float = 0.01,
             return_per_frame: bool = False,
             opts: RenderOptions | None = None) -> SeparationResult:
    """Split every keyframe's Gaussians into static and dynamic sets.

    A Gaussian is dynamic iff its global motion score exceeds eta
    (boundary scores count as static). Raising eta can only move
    Gaussians from dynamic to static.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    result = global_motion(scene, eps_rel, return_per_frame=True, opts=opts)
    m_per_keyframe, per_frame = result
    static_ids, dynamic_ids = [], []
    for m in m_per_keyframe:
        dyn = m > eta
        dynamic_ids.append(np.flatnonzero(dyn))
        static_ids.append(np.flatnonzero(~dyn))
    return SeparationResult(
        static_ids=static_ids,
        dynamic_ids=dynamic_ids,
        m=m_per_keyframe,
        eta=float(eta),
        per_frame=per_frame if return_per_frame else None,
    )


# ---------------------------------------------------------------------------
# sidecar (line-oriented text)
# ---------------------------------------------------------------------------

def write_separation(path, result: SeparationResult) -> None:
    lines = [f"splat4d-separation 1 eta {float(result.eta)!r}"]
    for k, m in enumerate(result.m):
        dynamic = set(int(i) for i in result.dynamic_ids[k])
        lines.append(f"keyframe {k} count {len(m)}")
        for i, mi in enumerate(m):
            label = "dynamic" if i in dynamic else "static"
            lines.append(f"{i} {label} {float(mi)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_separation(path) -> SeparationResult:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("splat4d-separation 1"):
        raise ValueError(f"{path}: not a splat4d separation sidecar")
    eta = float(lines[0].split()[-1])
    static_ids, dynamic_ids, m = [], [], []
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if head[:1] != ["keyframe"]:
            raise ValueError(f"{path}: malformed line {i + 1}: {lines[i]!r}")
        count = int(head[3])
        stat, dyn, scores = [], [], []
        for row in lines[i + 1: i + 1 + count]:
            idx_s, label, value = row.split()
            (dyn if label == "dynamic" else stat).append(int(idx_s))
            scores.append(float(value))
        static_ids.append(np.array(stat, dtype=np.int64))
        dynamic_ids.append(np.array(dyn, dtype=np.int64))
        m.append(np.array(scores))
        i += 1 + count
    return SeparationResult(static_ids=static_ids, dynamic_ids=dynamic_ids,
                            m=m, eta=eta)
