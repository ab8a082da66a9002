"""File formats, image codecs, and the synthetic-scene oracle generator.

On-disk layout of a scene directory:

    scene.json          manifest: format version, intrinsics, keyframe list
    keyframe_0000.ply   one binary little-endian PLY per keyframe
    ground_truth.json   optional sidecar written by the synthetic generator

Gaussian PLYs store 27 float64 properties per vertex in a fixed order
(x y z, alpha, rot_w..rot_z, scale_0..scale_2, red green blue, tau,
v_fwd_*, v_bwd_*, w_fwd_*, w_bwd_*). float64 keeps the write/read
round-trip bitwise lossless. Depth maps are PFM (float32, scale -1.0,
bottom-up rows); RGB and masks are 8-bit PNG.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    Array,
    CameraPose,
    GaussianCloud,
    Intrinsics,
    KeyframeField,
    Scene,
    axis_angle_to_quat,
    quat_mul,
    random_unit_quat,
)
from .trajectory import Trajectory

SCENE_FORMAT = "splat4d-scene"
TRAJECTORY_FORMAT = "splat4d-trajectory"
GROUND_TRUTH_FORMAT = "splat4d-ground-truth"
FORMAT_VERSION = 1
PLY_MAGIC_COMMENT = "splat4d_gaussians"

_PLY_PROPERTIES = (
    "x", "y", "z",
    "alpha",
    "rot_w", "rot_x", "rot_y", "rot_z",
    "scale_0", "scale_1", "scale_2",
    "red", "green", "blue",
    "tau",
    "v_fwd_x", "v_fwd_y", "v_fwd_z",
    "v_bwd_x", "v_bwd_y", "v_bwd_z",
    "w_fwd_x", "w_fwd_y", "w_fwd_z",
    "w_bwd_x", "w_bwd_y", "w_bwd_z",
)


class SceneFormatError(ValueError):
    """Raised for malformed, inconsistent, or wrong-version scene files."""


# ---------------------------------------------------------------------------
# Gaussian PLY
# ---------------------------------------------------------------------------

def write_gaussian_ply(path, cloud: GaussianCloud) -> None:
    path = Path(path)
    n = len(cloud)
    table = np.concatenate(
        [cloud.mu, cloud.alpha[:, None], cloud.rot, cloud.scale, cloud.color,
         cloud.tau[:, None], cloud.v_fwd, cloud.v_bwd, cloud.w_fwd, cloud.w_bwd],
        axis=1,
    ) if n else np.zeros((0, len(_PLY_PROPERTIES)))
    header = ["ply", "format binary_little_endian 1.0",
              f"comment {PLY_MAGIC_COMMENT} version {FORMAT_VERSION}",
              "comment sh_degree 0",
              f"element vertex {n}"]
    header += [f"property double {name}" for name in _PLY_PROPERTIES]
    header.append("end_header")
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(np.ascontiguousarray(table, dtype="<f8").tobytes())


def read_gaussian_ply(path) -> GaussianCloud:
    path = Path(path)
    if not path.exists():
        raise SceneFormatError(f"gaussian file not found: {path}")
    with open(path, "rb") as f:
        blob = f.read()
    marker = b"end_header\n"
    pos = blob.find(marker)
    if pos < 0 or not blob.startswith(b"ply\n"):
        raise SceneFormatError(f"{path}: not a PLY file")
    header = blob[:pos].decode("ascii", errors="replace").splitlines()
    body = blob[pos + len(marker):]

    count = None
    version = None
    props = []
    for line in header[1:]:
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "format":
            if tokens[1] != "binary_little_endian":
                raise SceneFormatError(f"{path}: unsupported PLY format {tokens[1]}")
        elif tokens[0] == "comment" and len(tokens) >= 4 and tokens[1] == PLY_MAGIC_COMMENT:
            version = int(tokens[3])
        elif tokens[0] == "element":
            if tokens[1] != "vertex":
                raise SceneFormatError(f"{path}: unexpected element {tokens[1]}")
            count = int(tokens[2])
        elif tokens[0] == "property":
            if tokens[1] != "double":
                raise SceneFormatError(f"{path}: property {tokens[2]} must be double")
            props.append(tokens[2])
    if version is None:
        raise SceneFormatError(f"{path}: missing {PLY_MAGIC_COMMENT} version comment")
    if version != FORMAT_VERSION:
        raise SceneFormatError(
            f"{path}: format version {version} not supported (expected {FORMAT_VERSION})"
        )
    if count is None:
        raise SceneFormatError(f"{path}: missing vertex element")
    if tuple(props) != _PLY_PROPERTIES:
        missing = [p for p in _PLY_PROPERTIES if p not in props]
        raise SceneFormatError(
            f"{path}: property list mismatch; missing {missing or 'none'}, got {props}"
        )
    expected = count * len(_PLY_PROPERTIES) * 8
    if len(body) < expected:
        raise SceneFormatError(f"{path}: truncated payload ({len(body)} < {expected} bytes)")
    table = np.frombuffer(body[:expected], dtype="<f8").reshape(count, len(_PLY_PROPERTIES))
    if not np.all(np.isfinite(table)):
        raise SceneFormatError(f"{path}: non-finite values in Gaussian data")
    cloud = GaussianCloud(
        mu=table[:, 0:3], alpha=table[:, 3], rot=table[:, 4:8],
        scale=table[:, 8:11], color=table[:, 11:14], tau=table[:, 14],
        v_fwd=table[:, 15:18], v_bwd=table[:, 18:21],
        w_fwd=table[:, 21:24], w_bwd=table[:, 24:27],
        validate=False,
    )
    try:
        cloud.validate()
    except ValueError as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc
    return cloud


# ---------------------------------------------------------------------------
# scene manifest
# ---------------------------------------------------------------------------

def _intrinsics_to_json(K: Intrinsics) -> dict:
    return {"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy,
            "width": K.width, "height": K.height}


def _intrinsics_from_json(obj: dict, ctx: str) -> Intrinsics:
    try:
        return Intrinsics(**{k: obj[k] for k in ("fx", "fy", "cx", "cy", "width", "height")})
    except KeyError as exc:
        raise SceneFormatError(f"{ctx}: intrinsics missing field {exc}") from exc
    except ValueError as exc:
        raise SceneFormatError(f"{ctx}: {exc}") from exc


def _pose_to_json(pose: CameraPose) -> dict:
    return {"quat": list(pose.quat), "trans": list(pose.trans), "time": pose.time}


def _pose_from_json(obj: dict, ctx: str) -> CameraPose:
    try:
        pose = CameraPose(quat=obj["quat"], trans=obj["trans"], time=obj["time"])
    except KeyError as exc:
        raise SceneFormatError(f"{ctx}: camera missing field {exc}") from exc
    except ValueError as exc:
        raise SceneFormatError(f"{ctx}: {exc}") from exc
    if not (np.all(np.isfinite(pose.quat)) and np.all(np.isfinite(pose.trans))):
        raise SceneFormatError(f"{ctx}: non-finite camera pose")
    return pose


def _load_json(path: Path, expected_format: str) -> dict:
    if not path.exists():
        raise SceneFormatError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(f"{path}: invalid JSON ({exc})") from exc
    if obj.get("format") != expected_format:
        raise SceneFormatError(
            f"{path}: expected format {expected_format!r}, got {obj.get('format')!r}"
        )
    if obj.get("version") != FORMAT_VERSION:
        raise SceneFormatError(
            f"{path}: format version {obj.get('version')} not supported "
            f"(expected {FORMAT_VERSION})"
        )
    return obj


def write_scene(directory, scene: Scene) -> Path:
    """Write a scene as manifest + per-keyframe PLYs; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, kf in enumerate(scene.keyframes):
        name = f"keyframe_{k:04d}.ply"
        write_gaussian_ply(directory / name, kf.gaussians)
        entries.append({"time": kf.time, "camera": _pose_to_json(kf.camera), "file": name})
    manifest = {
        "format": SCENE_FORMAT,
        "version": FORMAT_VERSION,
        "intrinsics": _intrinsics_to_json(scene.intrinsics),
        "keyframes": entries,
    }
    path = directory / "scene.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, allow_nan=False)
        f.write("\n")
    return path


def read_scene(directory) -> Scene:
    directory = Path(directory)
    manifest_path = directory / "scene.json"
    obj = _load_json(manifest_path, SCENE_FORMAT)
    if "intrinsics" not in obj:
        raise SceneFormatError(f"{manifest_path}: missing intrinsics")
    K = _intrinsics_from_json(obj["intrinsics"], str(manifest_path))
    entries = obj.get("keyframes")
    if not entries:
        raise SceneFormatError(f"{manifest_path}: scene needs at least one keyframe")
    keyframes = []
    for i, entry in enumerate(entries):
        ctx = f"{manifest_path} keyframe {i}"
        for key in ("time", "camera", "file"):
            if key not in entry:
                raise SceneFormatError(f"{ctx}: missing field {key!r}")
        cloud = read_gaussian_ply(directory / entry["file"])
        pose = _pose_from_json(entry["camera"], ctx)
        try:
            keyframes.append(KeyframeField(time=entry["time"], gaussians=cloud, camera=pose))
        except ValueError as exc:
            raise SceneFormatError(f"{ctx}: {exc}") from exc
    try:
        return Scene(intrinsics=K, keyframes=tuple(keyframes))
    except ValueError as exc:
        raise SceneFormatError(f"{manifest_path}: {exc}") from exc


def write_trajectory(path, traj: Trajectory) -> None:
    obj = {
        "format": TRAJECTORY_FORMAT,
        "version": FORMAT_VERSION,
        "intrinsics": _intrinsics_to_json(traj.intrinsics),
        "poses": [_pose_to_json(p) for p in traj.poses],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, allow_nan=False)
        f.write("\n")


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    obj = _load_json(path, TRAJECTORY_FORMAT)
    if "intrinsics" not in obj or "poses" not in obj:
        raise SceneFormatError(f"{path}: missing intrinsics or poses")
    K = _intrinsics_from_json(obj["intrinsics"], str(path))
    poses = [_pose_from_json(p, f"{path} pose {i}") for i, p in enumerate(obj["poses"])]
    try:
        return Trajectory(tuple(poses), K)
    except ValueError as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# image / depth / mask codecs
# ---------------------------------------------------------------------------

def write_image(path, rgb: Array) -> None:
    """Float RGB in [0, 1] to 8-bit PNG (values clipped, then rounded)."""
    arr = np.clip(np.round(np.asarray(rgb, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {arr.shape}")
    Image.fromarray(arr, mode="RGB").save(path)


def read_image(path) -> Array:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def write_mask(path, mask: Array) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def read_mask(path) -> Array:
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 127


def write_depth(path, depth: Array) -> None:
    """Depth map to grayscale PFM: float32, little-endian (scale -1.0),
    rows bottom-up per the PFM convention. Read-back is bit-exact."""
    arr = np.asarray(depth, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected an (H, W) depth map, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_depth(path) -> Array:
    path = Path(path)
    with open(path, "rb") as f:
        blob = f.read()
    parts = blob.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"Pf":
        raise SceneFormatError(f"{path}: not a grayscale PFM file")
    try:
        w, h = (int(tok) for tok in parts[1].split())
        scale = float(parts[2])
    except ValueError as exc:
        raise SceneFormatError(f"{path}: malformed PFM header") from exc
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(parts[3][: w * h * 4], dtype=dtype)
    if data.size != w * h:
        raise SceneFormatError(f"{path}: truncated PFM payload")
    return np.flipud(data.reshape(h, w)).astype(np.float32)


# ---------------------------------------------------------------------------
# synthetic-scene oracle generator
# ---------------------------------------------------------------------------

MOTION_KINDS = ("linear", "rotating", "half_static")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic synthetic scene with known ground truth.

    Dynamic objects cycle through the `motion` kinds. Each occluded mover
    adds a moving Gaussian plus a large static occluder that hides it from
    the (static) camera at every keyframe.
    """

    static_count: int = 6
    dynamic_count: int = 2
    motion: tuple = ("linear",)
    occluded_movers: int = 0
    keyframes: int = 5
    extent: float = 4.0
    seed: int = 0
    tau: float = 0.5
    alpha_range: tuple = (0.7, 0.95)
    scale_range: tuple = (0.08, 0.2)
    width: int = 64
    height: int = 64
    focal: float = 64.0
    z_center: float = 6.0

    def __post_init__(self):
        if min(self.static_count, self.dynamic_count, self.occluded_movers) < 0:
            raise ValueError("object counts must be >= 0")
        if self.keyframes < 1:
            raise ValueError("need at least one keyframe")
        if self.extent <= 0:
            raise ValueError("extent must be > 0")
        for kind in self.motion:
            if kind not in MOTION_KINDS:
                raise ValueError(f"unknown motion kind {kind!r} (choose from {MOTION_KINDS})")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")


@dataclass
class SynthObject:
    kind: str                    # static | linear | rotating | half_static | occluder
    label: str                   # static | dynamic
    base_position: Array
    velocity: Array
    switch_time: float
    base_rotation: Array
    spin_axis: Array
    spin_rate: float
    alpha: float
    color: Array
    scale: Array
    tau: float
    occludes: int | None = None

    def position_at(self, t: float) -> Array:
        return self.base_position + self.velocity * max(0.0, t - self.switch_time)

    def rotation_at(self, t: float) -> Array:
        if self.spin_rate == 0.0:
            return self.base_rotation
        return quat_mul(self.base_rotation, axis_angle_to_quat(self.spin_axis * self.spin_rate * t))


@dataclass
class GroundTruth:
    """Self-consistent truth for a synthetic scene: per-object motion
    models, labels, and occlusion relationships."""

    objects: list
    keyframe_times: Array

    def labels(self) -> list:
        return [obj.label for obj in self.objects]

    def static_ids(self) -> list:
        ids = np.array([i for i, o in enumerate(self.objects) if o.label == "static"],
                       dtype=np.int64)
        return [ids] * len(self.keyframe_times)

    def dynamic_ids(self) -> list:
        ids = np.array([i for i, o in enumerate(self.objects) if o.label == "dynamic"],
                       dtype=np.int64)
        return [ids] * len(self.keyframe_times)

    def occlusions(self) -> list:
        return [(i, o.occludes) for i, o in enumerate(self.objects) if o.occludes is not None]

    def position_at(self, obj_index: int, t: float) -> Array:
        return self.objects[obj_index].position_at(t)

    def cloud_at(self, t: float) -> GaussianCloud:
        """True Gaussian field at time t (full stored opacities)."""
        objs = self.objects
        if not objs:
            return GaussianCloud.empty()
        return GaussianCloud(
            mu=np.stack([o.position_at(t) for o in objs]),
            alpha=np.array([o.alpha for o in objs]),
            rot=np.stack([o.rotation_at(t) for o in objs]),
            scale=np.stack([o.scale for o in objs]),
            color=np.stack([o.color for o in objs]),
            tau=np.array([o.tau for o in objs]),
            v_fwd=np.stack([o.velocity if t >= o.switch_time else np.zeros(3) for o in objs]),
            v_bwd=np.stack([-o.velocity if t > o.switch_time else np.zeros(3) for o in objs]),
            w_fwd=np.stack([o.spin_axis * o.spin_rate for o in objs]),
            w_bwd=np.stack([-o.spin_axis * o.spin_rate for o in objs]),
        )


def _random_object(rng: np.random.Generator, spec: SynthSpec, kind: str,
                   switch_time: float) -> SynthObject:
    half = 0.4 * spec.extent
    pos = np.array([rng.uniform(-half, half), rng.uniform(-half, half),
                    spec.z_center + rng.uniform(-0.25, 0.25) * spec.extent])
    vel = np.zeros(3)
    spin_axis = np.zeros(3)
    spin_rate = 0.0
    if kind in ("linear", "rotating", "half_static"):
        direction = rng.normal(size=3)
        direction[2] *= 0.3  # keep motion mostly lateral so objects stay in view
        direction /= np.linalg.norm(direction)
        speed = rng.uniform(0.10, 0.22)
        vel = direction * speed
    if kind == "rotating":
        spin_axis = rng.normal(size=3)
        spin_axis /= np.linalg.norm(spin_axis)
        spin_rate = rng.uniform(0.2, 0.6)
    label = "dynamic" if np.linalg.norm(vel) > 0 else "static"
    return SynthObject(
        kind=kind,
        label=label,
        base_position=pos,
        velocity=vel,
        switch_time=switch_time if kind == "half_static" else 0.0,
        base_rotation=random_unit_quat(rng),
        spin_axis=spin_axis,
        spin_rate=spin_rate,
        alpha=float(rng.uniform(*spec.alpha_range)),
        color=rng.uniform(0.15, 0.95, size=3),
        scale=rng.uniform(*spec.scale_range, size=3),
        tau=spec.tau,
    )


def _occluded_pair(rng: np.random.Generator, spec: SynthSpec,
                   mover_index: int) -> tuple:
    mover = _random_object(rng, spec, "linear", 0.0)
    # push the mover to the back and shrink its path so a single occluder
    # can cover it at every keyframe
    z_m = spec.z_center + 0.35 * spec.extent
    base = np.array([rng.uniform(-0.15, 0.15) * spec.extent,
                     rng.uniform(-0.15, 0.15) * spec.extent, z_m])
    vel = mover.velocity.copy()
    vel[2] = 0.0
    norm = np.linalg.norm(vel)
    if norm > 0:
        vel = vel / norm * 0.12
    mover.base_position = base
    mover.velocity = vel
    mover.label = "dynamic"

    duration = float(spec.keyframes - 1)
    path_mid = base + vel * duration / 2.0
    z_o = 0.45 * spec.z_center
    occ_center = path_mid * (z_o / z_m)
    occ_center[2] = z_o
    half_span = np.linalg.norm(vel) * duration / 2.0
    lateral = (half_span + 0.6) * (z_o / z_m) * 1.6
    occluder = SynthObject(
        kind="occluder",
        label="static",
        base_position=occ_center,
        velocity=np.zeros(3),
        switch_time=0.0,
        base_rotation=np.array([1.0, 0.0, 0.0, 0.0]),
        spin_axis=np.zeros(3),
        spin_rate=0.0,
        alpha=0.995,
        color=rng.uniform(0.15, 0.95, size=3),
        scale=np.array([lateral, lateral, 0.05]),
        tau=spec.tau,
        occludes=mover_index,
    )
    return mover, occluder


def synth_scene(spec: SynthSpec) -> tuple:
    """Deterministic synthetic scene plus its GroundTruth.

    Stored velocities reproduce the keyframe-to-keyframe displacements
    exactly, so linear transfer over one interval lands on the true
    position. Motion switches (half_static) happen exactly at a keyframe
    time, keeping the piecewise-linear model exact at every keyframe.
    """
    rng = np.random.default_rng(spec.seed)
    times = np.arange(spec.keyframes, dtype=np.float64)
    switch_time = float(times[(spec.keyframes - 1) // 2])

    objects = []
    for _ in range(spec.static_count):
        objects.append(_random_object(rng, spec, "static", 0.0))
    for j in range(spec.dynamic_count):
        kind = spec.motion[j % len(spec.motion)] if spec.motion else "linear"
        objects.append(_random_object(rng, spec, kind, switch_time))
    for _ in range(spec.occluded_movers):
        mover, occluder = _occluded_pair(rng, spec, len(objects))
        objects.append(mover)
        objects.append(occluder)

    K = Intrinsics(fx=spec.focal, fy=spec.focal,
                   cx=(spec.width - 1) / 2.0, cy=(spec.height - 1) / 2.0,
                   width=spec.width, height=spec.height)
    gt = GroundTruth(objects=objects, keyframe_times=times)

    keyframes = []
    for k, t in enumerate(times):
        t_prev = times[k - 1] if k > 0 else t - 1.0
        t_next = times[k + 1] if k + 1 < len(times) else t + 1.0
        mu, rot = [], []
        v_fwd, v_bwd = [], []
        w_fwd, w_bwd = [], []
        for o in objects:
            p_now = o.position_at(t)
            mu.append(p_now)
            rot.append(o.rotation_at(t))
            v_fwd.append((o.position_at(t_next) - p_now) / (t_next - t))
            v_bwd.append((o.position_at(t_prev) - p_now) / (t - t_prev))
            w_fwd.append(o.spin_axis * o.spin_rate)
            w_bwd.append(-o.spin_axis * o.spin_rate)
        cloud = GaussianCloud(
            mu=np.stack(mu),
            alpha=np.array([o.alpha for o in objects]),
            rot=np.stack(rot),
            scale=np.stack([o.scale for o in objects]),
            color=np.stack([o.color for o in objects]),
            tau=np.array([o.tau for o in objects]),
            v_fwd=np.stack(v_fwd), v_bwd=np.stack(v_bwd),
            w_fwd=np.stack(w_fwd), w_bwd=np.stack(w_bwd),
        ) if objects else GaussianCloud.empty()
        camera = CameraPose(quat=(1.0, 0.0, 0.0, 0.0), trans=(0.0, 0.0, 0.0), time=float(t))
        keyframes.append(KeyframeField(time=float(t), gaussians=cloud, camera=camera))
    return Scene(intrinsics=K, keyframes=tuple(keyframes)), gt


# ---------------------------------------------------------------------------
# ground-truth sidecar
# ---------------------------------------------------------------------------

def write_ground_truth(path, gt: GroundTruth) -> None:
    obj = {
        "format": GROUND_TRUTH_FORMAT,
        "version": FORMAT_VERSION,
        "keyframe_times": list(gt.keyframe_times),
        "objects": [
            {
                "kind": o.kind,
                "label": o.label,
                "base_position": list(o.base_position),
                "velocity": list(o.velocity),
                "switch_time": o.switch_time,
                "base_rotation": list(o.base_rotation),
                "spin_axis": list(o.spin_axis),
                "spin_rate": o.spin_rate,
                "alpha": o.alpha,
                "color": list(o.color),
                "scale": list(o.scale),
                "tau": o.tau,
                "occludes": o.occludes,
            }
            for o in gt.objects
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, allow_nan=False)
        f.write("\n")


def read_ground_truth(path) -> GroundTruth:
    path = Path(path)
    obj = _load_json(path, GROUND_TRUTH_FORMAT)
    objects = []
    for i, o in enumerate(obj.get("objects", [])):
        try:
            objects.append(SynthObject(
                kind=o["kind"], label=o["label"],
                base_position=np.array(o["base_position"], dtype=np.float64),
                velocity=np.array(o["velocity"], dtype=np.float64),
                switch_time=float(o["switch_time"]),
                base_rotation=np.array(o["base_rotation"], dtype=np.float64),
                spin_axis=np.array(o["spin_axis"], dtype=np.float64),
                spin_rate=float(o["spin_rate"]),
                alpha=float(o["alpha"]),
                color=np.array(o["color"], dtype=np.float64),
                scale=np.array(o["scale"], dtype=np.float64),
                tau=float(o["tau"]),
                occludes=o.get("occludes"),
            ))
        except KeyError as exc:
            raise SceneFormatError(f"{path}: object {i} missing field {exc}") from exc
    return GroundTruth(objects=objects,
                       keyframe_times=np.array(obj["keyframe_times"], dtype=np.float64))
