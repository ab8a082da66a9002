"""Simulating the renderings a viewpoint change degrades.

Moving a camera away from the capture trajectory exposes two artifact
families: occlusion holes (geometry that was never observed) and flying
edge pixels (depth averaged across discontinuities). Both are simulated
here from first principles:

  culling  - find Gaussians invisible from a perturbed camera, drop
             them, re-render the ORIGINAL view: holes appear exactly
             where the novel view lacked coverage;
  filter   - box-filter the novel-view depth map and pull Gaussians to
             the filtered depth along their novel-view rays: edges fly.

The per-frame bundles (RGB + depth + observed-region mask + camera-ray
maps) are what a downstream restoration model would consume as inputs.

Writes packs to demos/output/03/.
"""

from pathlib import Path

import numpy as np

from splat4d import (
    CameraPose,
    DegradationMode,
    GaussianCloud,
    Intrinsics,
    KeyframeField,
    PerturbConfig,
    Scene,
    Trajectory,
    back_project,
    simulate_degradation,
    write_degradation_pack,
)

out_root = Path(__file__).parent / "output" / "03"
rng = np.random.default_rng(7)

# a wall of pixel-sized splats with a floating slab in front of it
K = Intrinsics(128.0, 128.0, 63.5, 63.5, 128, 128)
camera = CameraPose((1, 0, 0, 0), (0, 0, 0), 0.0)

wall_pts = back_project(np.full((128, 128), 8.0), camera, K)
slab_x, slab_y = np.meshgrid(np.linspace(-0.8, 0.8, 24), np.linspace(-0.6, 0.6, 18))
slab_pts = np.column_stack([slab_x.ravel() - 0.3, slab_y.ravel() + 0.2,
                            np.full(slab_x.size, 3.2)])


def splats(points, sigma_px, z_ref, base_color):
    n = len(points)
    colors = np.clip(base_color + rng.normal(0, 0.08, (n, 3)), 0, 1)
    return GaussianCloud(
        mu=points, alpha=np.full(n, 0.93),
        rot=np.tile([1.0, 0, 0, 0], (n, 1)),
        scale=np.full((n, 3), sigma_px * z_ref / K.fx),
        color=colors, tau=np.full(n, 0.5))


cloud = GaussianCloud.concat([
    splats(wall_pts, 0.6, 8.0, np.array([0.55, 0.55, 0.6])),
    splats(slab_pts, 0.9, 3.2, np.array([0.85, 0.45, 0.2])),
])
scene = Scene(intrinsics=K, keyframes=(
    KeyframeField(time=0.0, gaussians=cloud, camera=camera),))
trajectory = Trajectory((camera,), K)

perturb = PerturbConfig(max_translation=1.2, max_rotation=0.03,
                        lookat_blend=0.7, seed=3)

for mode, kernel in ((DegradationMode.CULLING, 3),
                     (DegradationMode.FILTER, 3),
                     (DegradationMode.FILTER, 9),
                     (DegradationMode.BOTH, 5)):
    pack = simulate_degradation(scene, trajectory, perturb, kernel=kernel,
                                mode=mode)
    name = f"{mode.value}_k{kernel}"
    write_degradation_pack(out_root / name, pack)
    hole_frac = float((~pack.mask[0]).mean())
    print(f"{name:12s} hole fraction {hole_frac:5.1%}   "
          f"culled {pack.culled_counts[0]:5d}   "
          f"mean displacement {pack.mean_displacement:.4f}")

print("packs written under", out_root)
