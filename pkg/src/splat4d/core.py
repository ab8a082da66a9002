"""Domain types and geometric primitives shared by every splat4d module.

Conventions used throughout the package:

- quaternions are scalar-first ``(w, x, y, z)`` and unit-norm
- camera poses are world-to-camera: ``c = R @ p + t``
- pixel coordinates are ``(u, v)`` = (column, row), with pixel centers at
  integer coordinates; a buffer is indexed ``buf[v, u]``
- depth is the camera-space z of a point; points in front of the camera
  have depth > 0
- all numeric state is float64
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

Array = np.ndarray

_QUAT_NORM_TOL = 1e-6


def _as_float_array(x, shape: tuple, name: str) -> Array:
    a = np.array(x, dtype=np.float64)
    if a.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# quaternion / rotation math (all functions accept single or batched inputs)
# ---------------------------------------------------------------------------

def quat_normalize(q: Array) -> Array:
    """Return q scaled to unit norm. q: (..., 4)."""
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def quat_conjugate(q: Array) -> Array:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_mul(a: Array, b: Array) -> Array:
    """Hamilton product a ⊗ b, renormalized to unit. a, b: (..., 4)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    w1, x1, y1, z1 = (a[..., i] for i in range(4))
    w2, x2, y2, z2 = (b[..., i] for i in range(4))
    out = np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )
    return quat_normalize(out)


def axis_angle_to_quat(v: Array) -> Array:
    """Rotation vector (axis * angle, radians) to unit quaternion.

    The zero vector maps exactly to the identity (1, 0, 0, 0); the vector
    part uses sin(θ/2)/θ evaluated through sinc so there is no division
    by a vanishing angle.
    """
    v = np.asarray(v, dtype=np.float64)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    half = 0.5 * theta
    w = np.cos(half)
    # sin(θ/2) / θ == 0.5 * sinc(θ / (2π)), finite and exactly 0.5 at θ = 0
    xyz = v * 0.5 * np.sinc(half / np.pi)
    return np.concatenate([w, xyz], axis=-1)


def quat_to_rotmat(q: Array) -> Array:
    """Unit quaternion(s) to rotation matrix/matrices. (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = (q[..., i] for i in range(4))
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    rows = [
        np.stack([1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)], axis=-1),
        np.stack([2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)], axis=-1),
        np.stack([2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def quat_from_rotmat(R: Array) -> Array:
    """Rotation matrix to unit quaternion (w >= 0 branch chosen stably)."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError("quat_from_rotmat expects a single 3x3 matrix")
    tr = np.trace(R)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def slerp(qa: Array, qb: Array, f: float) -> Array:
    """Spherical interpolation between unit quaternions, f in [0, 1].

    f = 0 returns qa unchanged; qb is sign-aligned to qa first so the
    shorter arc is taken.
    """
    qa = np.asarray(qa, dtype=np.float64)
    qb = np.asarray(qb, dtype=np.float64)
    if f == 0.0:
        return qa.copy()
    if f == 1.0:
        return qb.copy() if np.dot(qa, qb) >= 0 else -qb
    d = float(np.dot(qa, qb))
    if d < 0.0:
        qb, d = -qb, -d
    if d > 1.0 - 1e-12:
        return quat_normalize(qa + f * (qb - qa))
    omega = np.arccos(np.clip(d, -1.0, 1.0))
    so = np.sin(omega)
    return quat_normalize(
        (np.sin((1.0 - f) * omega) / so) * qa + (np.sin(f * omega) / so) * qb
    )


def random_unit_quat(rng: np.random.Generator, n: int | None = None) -> Array:
    """Uniformly distributed unit quaternion(s) with w >= 0."""
    shape = (4,) if n is None else (n, 4)
    q = rng.normal(size=shape)
    q = quat_normalize(q)
    w = q[..., :1]
    return q * np.where(w < 0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian4D:
    """One time-aware Gaussian primitive.

    Velocities are expressed in the world frame, per unit of the scene
    time axis (frame index), so a transfer over Δt frames displaces the
    center by v * |Δt|. Angular velocities are axis-angle vectors under
    the same time unit. ``tau`` in (0, 1) controls how quickly opacity
    decays away from the primitive's anchor time (larger = longer-lived).
    """

    mu: Array
    alpha: float
    rot: Array
    scale: Array
    color: Array
    tau: float
    v_fwd: Array = field(default_factory=lambda: np.zeros(3))
    v_bwd: Array = field(default_factory=lambda: np.zeros(3))
    w_fwd: Array = field(default_factory=lambda: np.zeros(3))
    w_bwd: Array = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_float_array(self.mu, (3,), "mu"))
        object.__setattr__(self, "rot", _as_float_array(self.rot, (4,), "rot"))
        object.__setattr__(self, "scale", _as_float_array(self.scale, (3,), "scale"))
        object.__setattr__(self, "color", _as_float_array(self.color, (3,), "color"))
        for name in ("v_fwd", "v_bwd", "w_fwd", "w_bwd"):
            object.__setattr__(self, name, _as_float_array(getattr(self, name), (3,), name))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "tau", float(self.tau))
        if abs(np.linalg.norm(self.rot) - 1.0) > _QUAT_NORM_TOL:
            raise ValueError(f"rot must be a unit quaternion, |rot| = {np.linalg.norm(self.rot):.8f}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in the open interval (0, 1), got {self.tau}")
        if np.any(self.scale <= 0.0):
            raise ValueError(f"scale components must be > 0, got {self.scale}")


class GaussianCloud:
    """Struct-of-arrays batch of Gaussian4D primitives.

    Behaves as an ordered, immutable sequence of Gaussian4D while keeping
    every attribute in a packed float64 array, which is what the renderer
    and the field-interpolation code operate on.
    """

    __slots__ = ("mu", "alpha", "rot", "scale", "color", "tau",
                 "v_fwd", "v_bwd", "w_fwd", "w_bwd")

    def __init__(self, mu, alpha, rot, scale, color, tau,
                 v_fwd=None, v_bwd=None, w_fwd=None, w_bwd=None,
                 validate: bool = True):
        n = np.asarray(mu).shape[0] if np.asarray(mu).ndim == 2 else 0
        self.mu = self._vec3(mu, n)
        self.alpha = np.ascontiguousarray(np.asarray(alpha, dtype=np.float64).reshape(n))
        self.rot = np.ascontiguousarray(np.asarray(rot, dtype=np.float64).reshape(n, 4))
        self.scale = self._vec3(scale, n)
        self.color = self._vec3(color, n)
        self.tau = np.ascontiguousarray(np.asarray(tau, dtype=np.float64).reshape(n))
        zero = np.zeros((n, 3))
        self.v_fwd = self._vec3(v_fwd, n) if v_fwd is not None else zero.copy()
        self.v_bwd = self._vec3(v_bwd, n) if v_bwd is not None else zero.copy()
        self.w_fwd = self._vec3(w_fwd, n) if w_fwd is not None else zero.copy()
        self.w_bwd = self._vec3(w_bwd, n) if w_bwd is not None else zero.copy()
        for name in self.__slots__:
            getattr(self, name).setflags(write=False)
        if validate:
            self.validate()

    @staticmethod
    def _vec3(x, n: int) -> Array:
        return np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape(n, 3))

    def validate(self) -> None:
        if len(self) == 0:
            return
        norms = np.linalg.norm(self.rot, axis=1)
        if np.any(np.abs(norms - 1.0) > _QUAT_NORM_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"rot must be unit quaternions; |rot[{bad}]| = {norms[bad]:.8f}")
        if np.any((self.alpha < 0) | (self.alpha > 1)):
            raise ValueError("alpha must be in [0, 1]")
        if np.any((self.tau <= 0) | (self.tau >= 1)):
            raise ValueError("tau must be in the open interval (0, 1)")
        if np.any(self.scale <= 0):
            raise ValueError("scale components must be > 0")

    @classmethod
    def empty(cls) -> "GaussianCloud":
        z = np.zeros((0, 3))
        return cls(z, np.zeros(0), np.zeros((0, 4)), z, z, np.zeros(0), validate=False)

    @classmethod
    def from_gaussians(cls, gaussians: Iterable[Gaussian4D]) -> "GaussianCloud":
        gs = list(gaussians)
        if not gs:
            return cls.empty()
        return cls(
            mu=np.stack([g.mu for g in gs]),
            alpha=np.array([g.alpha for g in gs]),
            rot=np.stack([g.rot for g in gs]),
            scale=np.stack([g.scale for g in gs]),
            color=np.stack([g.color for g in gs]),
            tau=np.array([g.tau for g in gs]),
            v_fwd=np.stack([g.v_fwd for g in gs]),
            v_bwd=np.stack([g.v_bwd for g in gs]),
            w_fwd=np.stack([g.w_fwd for g in gs]),
            w_bwd=np.stack([g.w_bwd for g in gs]),
        )

    @classmethod
    def coerce(cls, gaussians) -> "GaussianCloud":
        if isinstance(gaussians, cls):
            return gaussians
        return cls.from_gaussians(gaussians)

    @classmethod
    def concat(cls, clouds: Sequence["GaussianCloud"]) -> "GaussianCloud":
        clouds = [c for c in clouds]
        if not clouds:
            return cls.empty()
        return cls(
            *[np.concatenate([getattr(c, name) for c in clouds])
              for name in cls.__slots__],
            validate=False,
        )

    def replace(self, **updates) -> "GaussianCloud":
        """New cloud with the given attribute arrays swapped out."""
        kwargs = {name: updates.get(name, getattr(self, name)) for name in self.__slots__}
        return GaussianCloud(**kwargs, validate=False)

    def take(self, indices) -> "GaussianCloud":
        idx = np.asarray(indices, dtype=np.int64)
        return GaussianCloud(
            *[getattr(self, name)[idx] for name in self.__slots__], validate=False
        )

    def __len__(self) -> int:
        return self.mu.shape[0]

    def __getitem__(self, i: int) -> Gaussian4D:
        return Gaussian4D(
            mu=self.mu[i], alpha=self.alpha[i], rot=self.rot[i],
            scale=self.scale[i], color=self.color[i], tau=self.tau[i],
            v_fwd=self.v_fwd[i], v_bwd=self.v_bwd[i],
            w_fwd=self.w_fwd[i], w_bwd=self.w_bwd[i],
        )

    def __iter__(self) -> Iterator[Gaussian4D]:
        for i in range(len(self)):
            yield self[i]

    def allclose(self, other: "GaussianCloud", atol: float = 0.0) -> bool:
        return all(
            np.allclose(getattr(self, name), getattr(other, name), atol=atol, rtol=0)
            for name in self.__slots__
        )


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera pose with a timestamp (frame units)."""

    quat: Array
    trans: Array
    time: float

    def __post_init__(self):
        object.__setattr__(self, "quat", _as_float_array(self.quat, (4,), "quat"))
        object.__setattr__(self, "trans", _as_float_array(self.trans, (3,), "trans"))
        object.__setattr__(self, "time", float(self.time))
        if abs(np.linalg.norm(self.quat) - 1.0) > _QUAT_NORM_TOL:
            raise ValueError(f"quat must be a unit quaternion, |quat| = {np.linalg.norm(self.quat):.8f}")

    def rotation(self) -> Array:
        return quat_to_rotmat(self.quat)

    def center(self) -> Array:
        """Camera origin in world coordinates."""
        return -self.rotation().T @ self.trans

    @staticmethod
    def from_center(quat: Array, center: Array, time: float) -> "CameraPose":
        R = quat_to_rotmat(np.asarray(quat, dtype=np.float64))
        return CameraPose(quat=quat, trans=-R @ np.asarray(center, dtype=np.float64), time=time)


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be > 0")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")

    def scaled(self, width: int, height: int) -> "Intrinsics":
        """Proportionally rescaled intrinsics for a different render size."""
        sx = width / self.width
        sy = height / self.height
        return Intrinsics(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy,
                          width, height)


@dataclass(frozen=True)
class KeyframeField:
    """All Gaussians anchored at one keyframe timestamp, plus that frame's camera."""

    time: float
    gaussians: GaussianCloud
    camera: CameraPose

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "gaussians", GaussianCloud.coerce(self.gaussians))
        if self.time != self.camera.time:
            raise ValueError(
                f"keyframe time {self.time} must equal camera time {self.camera.time}"
            )


@dataclass(frozen=True)
class Scene:
    """Ordered keyframe fields sharing one set of intrinsics and a global time axis."""

    intrinsics: Intrinsics
    keyframes: tuple

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        if len(self.keyframes) < 1:
            raise ValueError("a scene needs at least one keyframe")
        times = self.times()
        if np.any(np.diff(times) <= 0):
            raise ValueError("keyframe times must be strictly increasing")

    def times(self) -> Array:
        return np.array([k.time for k in self.keyframes])

    def time_range(self) -> tuple:
        ts = self.times()
        return float(ts[0]), float(ts[-1])

    def diagonal(self) -> float:
        """Bounding-box diagonal over all keyframe Gaussian centers."""
        mus = [k.gaussians.mu for k in self.keyframes if len(k.gaussians)]
        if not mus:
            return 0.0
        pts = np.concatenate(mus)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

_DEPTH_EPS = 1e-9


def _safe_z(z: Array) -> Array:
    """Clamp |z| away from zero before dividing; points that needed the
    clamp report depth <= 1e-9 and are treated as invalid by callers."""
    return np.where(np.abs(z) < _DEPTH_EPS, np.where(z < 0, -_DEPTH_EPS, _DEPTH_EPS), z)


def project_points(points: Array, pose: CameraPose, K: Intrinsics) -> tuple:
    """Project world points to (pixels (N, 2), depths (N,)).

    Depth may be <= 0 for points at or behind the camera plane; callers
    filter on depth.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cam = pts @ pose.rotation().T + pose.trans
    depth = cam[:, 2].copy()
    z = _safe_z(depth)
    pix = np.stack([K.fx * cam[:, 0] / z + K.cx, K.fy * cam[:, 1] / z + K.cy], axis=1)
    return pix, depth


def project_point(p: Array, pose: CameraPose, K: Intrinsics) -> tuple:
    """Single-point version of project_points: ((u, v), depth)."""
    pix, depth = project_points(np.asarray(p, dtype=np.float64).reshape(1, 3), pose, K)
    return pix[0], float(depth[0])


def back_project(depth_map: Array, pose: CameraPose, K: Intrinsics) -> Array:
    """Lift a depth map to world points, one per pixel with depth > 0.

    Points are returned in row-major pixel order as an (M, 3) array.
    Pixels with depth <= 0 are skipped.
    """
    d = np.asarray(depth_map, dtype=np.float64)
    if d.shape != (K.height, K.width):
        raise ValueError(
            f"depth map shape {d.shape} does not match intrinsics "
            f"({K.height}, {K.width})"
        )
    vs, us = np.nonzero(d > 0)
    if vs.size == 0:
        return np.zeros((0, 3))
    z = d[vs, us]
    cam = np.stack([(us - K.cx) / K.fx * z, (vs - K.cy) / K.fy * z, z], axis=1)
    R = pose.rotation()
    return (cam - pose.trans) @ R
