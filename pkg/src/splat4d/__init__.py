"""splat4d: time-aware Gaussian splatting at desk scale.

Scene state is a set of Gaussian primitives carrying bidirectional linear
and angular velocities plus a life span, anchored at sparse keyframes.
The package interpolates that field at arbitrary timestamps, renders it
with a deterministic software rasterizer, simulates the degradation
patterns of viewpoint changes, separates static from dynamic content by
global motion tracking, and round-trips everything through versioned
file formats.
"""

from .core import (
    CameraPose,
    Gaussian4D,
    GaussianCloud,
    Intrinsics,
    KeyframeField,
    Scene,
    axis_angle_to_quat,
    back_project,
    project_point,
    project_points,
    quat_conjugate,
    quat_from_rotmat,
    quat_mul,
    quat_normalize,
    quat_to_rotmat,
    slerp,
)
from .degrade import (
    DegradationMode,
    DegradationPack,
    PerturbConfig,
    average_geometry_filter,
    cull_invisible,
    perturb_trajectory,
    scene_center,
    simulate_degradation,
    write_degradation_pack,
)
from .dynamics import (
    InterpConfig,
    InterpMode,
    Track3D,
    aggregate_dynamic,
    aggregate_static,
    interpolate_field,
    interpolate_opacity,
    interpolate_position,
    interpolate_rotation,
    normalized_distance,
    track_3d,
    transfer_cloud,
    voxel_dedup,
)
from .metrics import psnr, ssim
from .motiontrack import (
    SeparationResult,
    default_eta,
    frame_velocity_magnitude,
    global_motion,
    read_separation,
    separate,
    write_separation,
)
from .raster import (
    RenderOptions,
    RenderTarget,
    binarize_mask,
    project_gaussian,
    render,
    render_oracle,
)
from .sceneio import (
    GroundTruth,
    SceneFormatError,
    SynthSpec,
    read_depth,
    read_ground_truth,
    read_image,
    read_mask,
    read_scene,
    read_trajectory,
    synth_scene,
    write_depth,
    write_ground_truth,
    write_image,
    write_mask,
    write_scene,
    write_trajectory,
)
from .trajectory import (
    PathKind,
    Trajectory,
    make_path,
    plucker_map,
    smooth_trajectory,
    trajectory_jerk,
)

__version__ = "0.1.0"
