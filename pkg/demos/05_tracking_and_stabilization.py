"""Two camera/flow applications on top of the same primitives.

3D tracking: every Gaussian predicts its own next-keyframe position from
its stored forward velocity; nearest-neighbor association between the
prediction and the next keyframe chains into tracks. Because predictions
(not raw positions) drive the matching, two objects can swap places
without swapping identities.

Stabilization: camera centers are box-averaged and orientations averaged
with a sign-aligned quaternion mean, shrinking jerk while pinning the
endpoints. Plücker ray maps give any pose a dense 6D ray encoding that
downstream conditioning can consume.
"""

from pathlib import Path

import numpy as np

from splat4d import (
    CameraPose,
    Intrinsics,
    SynthSpec,
    Trajectory,
    plucker_map,
    smooth_trajectory,
    synth_scene,
    track_3d,
    trajectory_jerk,
    write_trajectory,
)

out_dir = Path(__file__).parent / "output" / "05"
out_dir.mkdir(parents=True, exist_ok=True)

# --- tracking -------------------------------------------------------------
scene, truth = synth_scene(SynthSpec(seed=11, static_count=0, dynamic_count=4,
                                     motion=("linear",), keyframes=6))
tracks = track_3d(scene, radius=0.5)
print(f"{len(tracks)} tracks over {len(scene.keyframes)} keyframes")
for tid, tr in enumerate(tracks):
    start = np.array2string(np.asarray(tr.positions[0]), precision=2)
    end = np.array2string(np.asarray(tr.positions[-1]), precision=2)
    print(f"  track {tid}: gaussian {tr.indices[0]} stays itself "
          f"across {len(tr)} frames, {start} -> {end}")

# --- stabilization ----------------------------------------------------------
rng = np.random.default_rng(2)
K = Intrinsics(128.0, 128.0, 63.5, 63.5, 128, 128)
shaky = Trajectory(tuple(
    CameraPose.from_center((1.0, 0, 0, 0),
                           np.array([0.15 * i, 0.0, 0.02 * i])
                           + rng.normal(0, 0.05, 3),
                           float(i))
    for i in range(40)), K)
smooth = smooth_trajectory(shaky, window=7)
before, after = trajectory_jerk(shaky), trajectory_jerk(smooth)
print(f"jerk {before:.3f} -> {after:.3f} "
      f"({100 * (1 - after / before):.0f}% removed)")
write_trajectory(out_dir / "shaky.json", shaky)
write_trajectory(out_dir / "smooth.json", smooth)

# --- ray maps ---------------------------------------------------------------
rays = plucker_map(smooth.poses[0], K, K.width, K.height)
d, moment = rays[..., :3], rays[..., 3:]
print("ray map", rays.shape, "| max |<d, o x d>| =",
      float(np.abs((d * moment).sum(-1)).max()))
np.save(out_dir / "rays_frame0.npy", rays)
print("outputs in", out_dir)
