"""Command-line interface.

Subcommands: synth, render, degrade, separate, track, stabilize, eval.
Exit codes: 0 success, 2 usage/validation error, 3 domain error (bad
timestamps, malformed files). Summary output is single-line key=value
records so pipelines can parse it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .degrade import DegradationMode, PerturbConfig, simulate_degradation, write_degradation_pack
from .dynamics import InterpConfig, InterpMode, interpolate_field, track_3d
from .metrics import psnr, ssim
from .motiontrack import default_eta, separate, write_separation
from .raster import RenderOptions, render
from .sceneio import (
    SceneFormatError,
    SynthSpec,
    read_image,
    read_scene,
    read_trajectory,
    synth_scene,
    write_depth,
    write_ground_truth,
    write_image,
    write_scene,
    write_trajectory,
)
from .trajectory import smooth_trajectory, trajectory_jerk


class UsageError(Exception):
    """Invalid arguments or input validation failure (exit code 2)."""


def _default_threads() -> int:
    env = os.environ.get("SPLAT4D_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _threads(args) -> int:
    return args.threads if args.threads is not None else _default_threads()


def _seed(args, fallback: int = 0) -> int:
    return args.seed if args.seed is not None else fallback


def _log(args, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(
            static_count=args.static,
            dynamic_count=args.dynamic,
            motion=tuple(args.motion.split(",")) if args.motion else ("linear",),
            occluded_movers=args.occluded_movers,
            keyframes=args.keyframes,
            extent=args.extent,
            tau=args.tau,
            seed=_seed(args),
        )
    except ValueError as exc:
        raise UsageError(f"invalid synthetic spec: {exc}") from exc
    scene, gt = synth_scene(spec)
    out = Path(args.out)
    write_scene(out, scene)
    write_ground_truth(out / "ground_truth.json", gt)
    n_dynamic = sum(1 for label in gt.labels() if label == "dynamic")
    print(f"scene={out} keyframes={len(scene.keyframes)} "
          f"gaussians={sum(len(k.gaussians) for k in scene.keyframes)} "
          f"objects={len(gt.objects)} dynamic={n_dynamic} "
          f"static={len(gt.objects) - n_dynamic}")
    return 0


def cmd_render(args) -> int:
    scene = read_scene(args.scene)
    traj = read_trajectory(args.traj)
    width = args.width if args.width else traj.intrinsics.width
    height = args.height if args.height else traj.intrinsics.height
    opts = RenderOptions(width=width, height=height, threads=_threads(args))
    mode = InterpMode.NEAREST_ONLY if args.mode == "nearest" else InterpMode.UNION_BOTH
    cfg = InterpConfig(gamma=args.gamma, mode=mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for f, pose in enumerate(traj.poses):
        field = interpolate_field(scene, pose.time, cfg)
        target = render(field, pose, traj.intrinsics, opts)
        write_image(out / f"rgb_{f:04d}.png", target.rgb)
        write_depth(out / f"depth_{f:04d}.pfm", target.depth)
        write_depth(out / f"acc_{f:04d}.pfm", target.acc_opacity)
        _log(args, f"frame {f}: time={pose.time} gaussians={len(field)}")
    print(f"out={out} frames={len(traj.poses)} width={width} height={height}")
    return 0


def cmd_degrade(args) -> int:
    if args.kernel < 1 or args.kernel % 2 == 0:
        raise UsageError(f"kernel must be odd and >= 1, got {args.kernel}")
    scene = read_scene(args.scene)
    traj = read_trajectory(args.traj)
    mode = {m.value: m for m in DegradationMode}[args.mode]
    cfg = PerturbConfig(
        max_translation=args.max_translation,
        max_rotation=args.max_rotation,
        lookat_blend=args.lookat_blend,
        seed=_seed(args),
    )
    opts = RenderOptions.native(traj.intrinsics, threads=_threads(args))
    pack = simulate_degradation(scene, traj, cfg, kernel=args.kernel,
                                mode=mode, opts=opts)
    write_degradation_pack(args.out, pack)
    print(f"out={args.out} frames={len(pack.rgb)} mode={args.mode} "
          f"kernel={args.kernel} culled_total={sum(pack.culled_counts)} "
          f"mean_displacement={pack.mean_displacement:.6f}")
    return 0


def cmd_separate(args) -> int:
    scene = read_scene(args.scene)
    eta = args.eta if args.eta is not None else default_eta(scene)
    opts = RenderOptions.native(scene.intrinsics, threads=_threads(args))
    result = separate(scene, eta, opts=opts)
    write_separation(args.out, result)
    n_static = sum(len(ids) for ids in result.static_ids)
    n_dynamic = sum(len(ids) for ids in result.dynamic_ids)
    print(f"out={args.out} eta={eta:.6f} static={n_static} dynamic={n_dynamic}")
    return 0


def cmd_track(args) -> int:
    scene = read_scene(args.scene)
    if len(scene.keyframes) < 2:
        raise UsageError("tracking needs a scene with at least 2 keyframes")
    if args.radius <= 0:
        raise UsageError(f"radius must be > 0, got {args.radius}")
    tracks = track_3d(scene, args.radius)
    lines = []
    for tid, tr in enumerate(tracks):
        for j, (gidx, pos) in enumerate(zip(tr.indices, tr.positions)):
            x, y, z = (float(c) for c in pos)
            lines.append(f"{tid} {tr.start + j} {gidx} {x!r} {y!r} {z!r}")
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""),
                              encoding="utf-8")
    print(f"out={args.out} tracks={len(tracks)} lines={len(lines)}")
    return 0


def cmd_stabilize(args) -> int:
    if args.window < 1 or args.window % 2 == 0:
        raise UsageError(f"window must be odd and >= 1, got {args.window}")
    traj = read_trajectory(args.traj)
    smoothed = smooth_trajectory(traj, args.window)
    write_trajectory(args.out, smoothed)
    before = trajectory_jerk(traj)
    after = trajectory_jerk(smoothed)
    reduction = 100.0 * (1.0 - after / before) if before > 1e-12 else 0.0
    print(f"out={args.out} window={args.window} jerk_before={before:.6f} "
          f"jerk_after={after:.6f} reduction_pct={reduction:.2f}")
    return 0


def cmd_eval(args) -> int:
    ref_dir, test_dir = Path(args.ref), Path(args.test)
    ref_files = sorted(p.name for p in ref_dir.glob("*.png"))
    test_files = sorted(p.name for p in test_dir.glob("*.png"))
    unmatched = sorted(set(ref_files) ^ set(test_files))
    if unmatched:
        raise UsageError("unmatched frames: " + ", ".join(unmatched))
    if not ref_files:
        raise UsageError(f"no PNG frames found in {ref_dir}")
    psnrs, ssims = [], []
    for name in ref_files:
        a = read_image(ref_dir / name)
        b = read_image(test_dir / name)
        p = psnr(a, b)
        s = ssim(a, b)
        psnrs.append(p)
        ssims.append(s)
        print(f"frame={name} psnr={p:.4f} ssim={s:.6f}")
    print(f"mean_psnr={np.mean(psnrs):.4f} mean_ssim={np.mean(ssims):.6f} "
          f"frames={len(ref_files)}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: SPLAT4D_THREADS or CPU count)")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for randomized steps (default 0)")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="splat4d",
        description="Time-aware Gaussian splatting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic scene with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--static", type=int, default=6)
    p.add_argument("--dynamic", type=int, default=2)
    p.add_argument("--motion", default="linear",
                   help="comma list cycled over dynamic objects: linear,rotating,half_static")
    p.add_argument("--occluded-movers", type=int, default=0)
    p.add_argument("--keyframes", type=int, default=5)
    p.add_argument("--extent", type=float, default=4.0)
    p.add_argument("--tau", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", parents=[common],
                       help="render a scene along a trajectory")
    p.add_argument("--scene", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--mode", choices=("nearest", "union"), default="union")
    p.add_argument("--gamma", type=float, default=4.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("degrade", parents=[common],
                       help="write a degradation pack (rgb/depth/mask/rays)")
    p.add_argument("--scene", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("cull", "filter", "both"), default="both")
    p.add_argument("--kernel", type=int, default=3)
    p.add_argument("--max-translation", type=float, default=0.25)
    p.add_argument("--max-rotation", type=float, default=0.05)
    p.add_argument("--lookat-blend", type=float, default=0.5)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("separate", parents=[common],
                       help="static/dynamic separation via global motion tracking")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eta", type=float, default=None,
                   help="motion threshold (default: 1%% of scene diagonal)")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("track", parents=[common],
                       help="chain nearest-neighbor associations into 3D tracks")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("stabilize", parents=[common],
                       help="smooth a camera trajectory")
    p.add_argument("--traj", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=5)
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("eval", parents=[common],
                       help="PSNR/SSIM between two frame directories")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SceneFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
