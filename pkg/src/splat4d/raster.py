"""Software splatting renderer.

Pipeline: project every Gaussian to a 2D mean / covariance / depth, sort
once by depth (global, stable), then alpha-composite front-to-back into
RGB, expected-depth, accumulated-opacity and forward/backward velocity
buffers. Compositing runs per tile over packed arrays; tiles only ever
see Gaussians whose guaranteed-contribution radius reaches them, so the
tiling (and the thread count) cannot change any pixel's result.

`render_oracle` implements the identical contract as plain per-pixel
Python loops over scalar-projected Gaussians and exists solely so the
fast path can be checked against it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .core import Array, CameraPose, GaussianCloud, Gaussian4D, Intrinsics, quat_to_rotmat

# low-pass dilation added to every 2D covariance, in px^2
COV2D_DILATION = 0.3

_ACC_FLOOR = 1e-4  # below this accumulated opacity, expected depth is reported as 0
_T_CUTOFF = 1e-12  # transmittance below which remaining contributions are dropped
_CHUNK = 1024      # Gaussians composited per vectorized block


@dataclass(frozen=True)
class RenderOptions:
    """Render-call configuration.

    width/height may differ from the intrinsics' native size; fx, fy, cx,
    cy are then rescaled proportionally, which makes rendering resolution
    independent of the capture resolution.
    """

    width: int
    height: int
    near: float = 0.01
    far: float = 1.0e4
    tile_size: int = 16
    alpha_min: float = 1.0 / 255.0
    dilation: float = COV2D_DILATION
    threads: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("render dimensions must be positive")
        if self.near <= 0:
            raise ValueError("near must be > 0")
        if self.far <= self.near:
            raise ValueError("far must be > near")
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")
        if not 0.0 < self.alpha_min < 1.0:
            raise ValueError("alpha_min must be in (0, 1)")
        if self.dilation < 0:
            raise ValueError("dilation must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @classmethod
    def native(cls, K: Intrinsics, **kwargs) -> "RenderOptions":
        return cls(width=K.width, height=K.height, **kwargs)


@dataclass
class RenderTarget:
    """Per-pixel output buffers of one render call.

    depth is the transmittance-weighted expected depth normalized by
    accumulated opacity, 0 where accumulated opacity < 1e-4. Velocity
    buffers composite the world-frame per-frame velocities exactly like
    color.
    """

    rgb: Array
    depth: Array
    acc_opacity: Array
    vel_fwd: Array
    vel_bwd: Array
    num_skipped: int = 0
    num_rejected: int = 0

    @classmethod
    def zeros(cls, height: int, width: int) -> "RenderTarget":
        return cls(
            rgb=np.zeros((height, width, 3)),
            depth=np.zeros((height, width)),
            acc_opacity=np.zeros((height, width)),
            vel_fwd=np.zeros((height, width, 3)),
            vel_bwd=np.zeros((height, width, 3)),
        )


def effective_intrinsics(K: Intrinsics, opts: RenderOptions) -> Intrinsics:
    if (opts.width, opts.height) == (K.width, K.height):
        return K
    return K.scaled(opts.width, opts.height)


def project_gaussian(g: Gaussian4D, pose: CameraPose, K: Intrinsics,
                     opts: RenderOptions | None = None):
    """Project one Gaussian to (mean2d, cov2d, depth), or None if rejected.

    cov2d includes the low-pass dilation (0.3 px^2 by default). Rejection
    happens when the center depth falls outside (near, far) or the 2D mean
    lies outside the image by more than 3 standard deviations (largest
    eigenvalue).
    """
    if opts is None:
        opts = RenderOptions.native(K)
    K = effective_intrinsics(K, opts)
    R = pose.rotation()
    cam = R @ g.mu + pose.trans
    depth = float(cam[2])
    if not (opts.near < depth < opts.far):
        return None
    z = depth
    u = K.fx * cam[0] / z + K.cx
    v = K.fy * cam[1] / z + K.cy

    Rg = quat_to_rotmat(g.rot)
    M = Rg * g.scale[None, :]
    sigma = M @ M.T
    C = R @ sigma @ R.T
    J = np.array([
        [K.fx / z, 0.0, -K.fx * cam[0] / (z * z)],
        [0.0, K.fy / z, -K.fy * cam[1] / (z * z)],
    ])
    cov2d = J @ C @ J.T + opts.dilation * np.eye(2)

    a, b, c = cov2d[0, 0], cov2d[0, 1], cov2d[1, 1]
    mid = 0.5 * (a + c)
    det = a * c - b * b
    lam_max = mid + math.sqrt(max(mid * mid - det, 0.0))
    sigma3 = 3.0 * math.sqrt(max(lam_max, 0.0))
    if (u < -sigma3 or u > (opts.width - 1) + sigma3
            or v < -sigma3 or v > (opts.height - 1) + sigma3):
        return None
    return np.array([u, v]), cov2d, depth


def binarize_mask(acc_opacity: Array, threshold: float) -> Array:
    """True where accumulated opacity >= threshold (observed regions)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return np.asarray(acc_opacity) >= threshold


# ---------------------------------------------------------------------------
# fast path
# ---------------------------------------------------------------------------

class _Projected:
    """Packed, depth-sorted, screen-space Gaussians ready for compositing.

    qa, qb, qc are the quadratic-form coefficients pre-negated and
    pre-halved so the per-pixel exponent is qa*dx^2 + qb*dx*dy + qc*dy^2.
    payload packs [r g b depth vfwd vbwd] so one matrix product reduces
    every buffer at once.
    """

    __slots__ = ("u", "v", "qa", "qb", "qc", "alpha", "payload",
                 "radius", "num_skipped", "num_rejected")


def _project_cloud(cloud: GaussianCloud, pose: CameraPose, K: Intrinsics,
                   opts: RenderOptions) -> _Projected:
    K = effective_intrinsics(K, opts)
    n = len(cloud)
    p = _Projected()
    p.num_skipped = 0
    p.num_rejected = 0
    if n == 0:
        for name in ("u", "v", "qa", "qb", "qc", "alpha", "radius"):
            setattr(p, name, np.zeros(0))
        p.payload = np.zeros((0, 10))
        return p

    with np.errstate(invalid="ignore", over="ignore"):
        R = pose.rotation()
        cam = cloud.mu @ R.T + pose.trans
        z = cam[:, 2]
        in_depth = (z > opts.near) & (z < opts.far)

        zs = np.where(in_depth, z, 1.0)  # placeholder for rejected rows
        u = K.fx * cam[:, 0] / zs + K.cx
        v = K.fy * cam[:, 1] / zs + K.cy

        Rg = quat_to_rotmat(cloud.rot)                   # (n, 3, 3)
        M = Rg * cloud.scale[:, None, :]
        sigma = M @ np.transpose(M, (0, 2, 1))           # (n, 3, 3)
        C = np.einsum("ij,njk,lk->nil", R, sigma, R)     # camera-frame covariance

        J = np.zeros((n, 2, 3))
        J[:, 0, 0] = K.fx / zs
        J[:, 0, 2] = -K.fx * cam[:, 0] / (zs * zs)
        J[:, 1, 1] = K.fy / zs
        J[:, 1, 2] = -K.fy * cam[:, 1] / (zs * zs)
        cov2d = np.einsum("nab,nbc,ndc->nad", J, C, J)
        cov2d[:, 0, 0] += opts.dilation
        cov2d[:, 1, 1] += opts.dilation

        a, b, c = cov2d[:, 0, 0], cov2d[:, 0, 1], cov2d[:, 1, 1]
        det = a * c - b * b
        det_ok = det > 1e-12  # also rules out NaN from overflowed covariances
        p.num_skipped = int(np.count_nonzero(in_depth & ~det_ok))

        mid = 0.5 * (a + c)
        lam_max = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))
        sigma3 = 3.0 * np.sqrt(np.maximum(lam_max, 0.0))
        # NaN propagated from an invalid covariance fails every comparison,
        # which correctly drops the Gaussian here
        in_image = ((u >= -sigma3) & (u <= (opts.width - 1) + sigma3)
                    & (v >= -sigma3) & (v <= (opts.height - 1) + sigma3))

        # a Gaussian with alpha < alpha_min cannot pass the per-pixel weight
        # cutoff anywhere, so dropping it is exact
        contributes = cloud.alpha >= opts.alpha_min
        keep = in_depth & det_ok & in_image & contributes
        p.num_rejected = int(np.count_nonzero(in_depth & det_ok & ~(in_image & contributes)))

    idx = np.flatnonzero(keep)
    order = idx[np.argsort(z[idx], kind="stable")]

    safe_det = np.where(det_ok, det, 1.0)
    p.u = u[order]
    p.v = v[order]
    p.qa = (-0.5 * c / safe_det)[order]
    p.qb = (b / safe_det)[order]
    p.qc = (-0.5 * a / safe_det)[order]
    p.alpha = cloud.alpha[order]
    p.payload = np.concatenate(
        [cloud.color[order], z[order, None], cloud.v_fwd[order], cloud.v_bwd[order]],
        axis=1)
    # beyond this radius the weight is provably < alpha_min; +1 px guards
    # the float boundary so tile culling can never drop a live contribution
    ratio = np.maximum(cloud.alpha[order] / opts.alpha_min, 1.0)
    p.radius = np.sqrt(2.0 * lam_max[order] * np.log(ratio)) + 1.0
    return p


class _Scratch:
    """Per-worker reusable buffers; avoids reallocating full-size chunk
    tensors for every tile."""

    def __init__(self, tile_size: int):
        shape = (_CHUNK, tile_size, tile_size)
        self.q = np.empty(shape)
        self.om = np.empty(shape)
        self.mask = np.empty(shape, dtype=bool)

    def views(self, g: int, th: int, tw: int):
        # edge tiles use a contiguous scratch slice so reshape stays a view
        flat_q = self.q.reshape(-1)[: g * th * tw]
        flat_om = self.om.reshape(-1)[: g * th * tw]
        flat_m = self.mask.reshape(-1)[: g * th * tw]
        return (flat_q.reshape(g, th, tw), flat_om.reshape(g, th, tw),
                flat_m.reshape(g, th, tw))


def _composite_tile(p: _Projected, members: Array, x0: int, x1: int,
                    y0: int, y1: int, alpha_min: float, out: RenderTarget,
                    scratch: _Scratch) -> None:
    th, tw = y1 - y0, x1 - x0
    xs = np.arange(x0, x1, dtype=np.float64)
    ys = np.arange(y0, y1, dtype=np.float64)

    npix = th * tw
    sums = np.zeros((10, npix))
    T = np.ones((th, tw))

    for s in range(0, members.size, _CHUNK):
        m = members[s:s + _CHUNK]
        g = m.size
        q, om, mask = scratch.views(g, th, tw)

        dx = p.u[m, None] - xs[None, :]                  # (g, tw)
        dy = p.v[m, None] - ys[None, :]                  # (g, th)
        ax = p.qa[m, None] * dx * dx                     # (g, tw)
        ay = p.qc[m, None] * dy * dy                     # (g, th)

        np.multiply(dy[:, :, None], dx[:, None, :], out=q)
        q *= p.qb[m, None, None]
        q += ax[:, None, :]
        q += ay[:, :, None]
        np.exp(q, out=q)
        q *= p.alpha[m, None, None]                      # weight w
        np.greater_equal(q, alpha_min, out=mask)
        np.multiply(q, mask, out=q)                      # clipped weight

        np.subtract(1.0, q, out=om)
        np.cumprod(om, axis=0, out=om)                   # running transmittance
        q[1:] *= om[:-1]
        q *= T[None, :, :]                               # contribution a * T

        sums += p.payload[m].T @ q.reshape(g, npix)
        T = T * om[-1]
        if np.all(T < _T_CUTOFF):
            break

    acc = 1.0 - T
    covered = acc >= _ACC_FLOOR
    dep = sums[3].reshape(th, tw)
    out.rgb[y0:y1, x0:x1] = np.moveaxis(sums[0:3].reshape(3, th, tw), 0, 2)
    out.depth[y0:y1, x0:x1] = np.where(covered, dep / np.where(covered, acc, 1.0), 0.0)
    out.acc_opacity[y0:y1, x0:x1] = acc
    out.vel_fwd[y0:y1, x0:x1] = np.moveaxis(sums[4:7].reshape(3, th, tw), 0, 2)
    out.vel_bwd[y0:y1, x0:x1] = np.moveaxis(sums[7:10].reshape(3, th, tw), 0, 2)


def _run_tile_jobs(p: _Projected, jobs, alpha_min: float, out: RenderTarget,
                   tile_size: int) -> None:
    scratch = _Scratch(tile_size)
    for members, x0, x1, y0, y1 in jobs:
        _composite_tile(p, members, x0, x1, y0, y1, alpha_min, out, scratch)


def render(gaussians, pose: CameraPose, K: Intrinsics,
           opts: RenderOptions | None = None) -> RenderTarget:
    """Render a Gaussian set into RGB/depth/opacity/velocity buffers.

    Deterministic for fixed input: the compositing order per pixel is
    fixed by one global stable depth sort, tiles write disjoint buffer
    regions, and the thread count cannot change any result.
    """
    if opts is None:
        opts = RenderOptions.native(K)
    cloud = GaussianCloud.coerce(gaussians)
    out = RenderTarget.zeros(opts.height, opts.width)
    p = _project_cloud(cloud, pose, K, opts)
    out.num_skipped = p.num_skipped
    out.num_rejected = p.num_rejected
    n = p.u.size
    if n == 0:
        return out

    ts = opts.tile_size
    ntx = (opts.width + ts - 1) // ts
    nty = (opts.height + ts - 1) // ts

    px0 = np.clip(np.ceil(p.u - p.radius), 0, opts.width - 1).astype(np.int64)
    px1 = np.clip(np.floor(p.u + p.radius), 0, opts.width - 1).astype(np.int64)
    py0 = np.clip(np.ceil(p.v - p.radius), 0, opts.height - 1).astype(np.int64)
    py1 = np.clip(np.floor(p.v + p.radius), 0, opts.height - 1).astype(np.int64)
    nonempty = ((p.u + p.radius >= 0) & (p.u - p.radius <= opts.width - 1)
                & (p.v + p.radius >= 0) & (p.v - p.radius <= opts.height - 1))

    tx0, tx1 = px0 // ts, px1 // ts
    ty0, ty1 = py0 // ts, py1 // ts
    counts = np.where(nonempty, (tx1 - tx0 + 1) * (ty1 - ty0 + 1), 0)
    total = int(counts.sum())
    if total == 0:
        return out

    # expand each Gaussian into (tile, rank) pairs; rank == position in the
    # global depth order, so a stable sort by tile preserves compositing order
    ranks = np.repeat(np.arange(n), counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - np.repeat(offsets, counts)
    widths = np.repeat(tx1 - tx0 + 1, counts)
    cell_ty = np.repeat(ty0, counts) + local // widths
    cell_tx = np.repeat(tx0, counts) + local % widths
    tile_ids = cell_ty * ntx + cell_tx

    sorter = np.argsort(tile_ids, kind="stable")
    tile_ids = tile_ids[sorter]
    ranks = ranks[sorter]
    bounds = np.searchsorted(tile_ids, np.arange(ntx * nty + 1))

    jobs = []
    for tid in np.unique(tile_ids):
        lo, hi = bounds[tid], bounds[tid + 1]
        tyy, txx = divmod(int(tid), ntx)
        x0, x1 = txx * ts, min((txx + 1) * ts, opts.width)
        y0, y1 = tyy * ts, min((tyy + 1) * ts, opts.height)
        jobs.append((ranks[lo:hi], x0, x1, y0, y1))

    # the per-tile matrix products are far too small for BLAS worker
    # threads to help; letting them spin only causes oversubscription
    with threadpool_limits(limits=1, user_api="blas"):
        if opts.threads == 1:
            _run_tile_jobs(p, jobs, opts.alpha_min, out, ts)
        else:
            # a handful of coarse jobs per worker keeps executor overhead
            # low; any partition yields identical output (disjoint regions)
            n_batches = min(len(jobs), opts.threads * 4)
            batches = [jobs[i::n_batches] for i in range(n_batches)]
            with ThreadPoolExecutor(max_workers=opts.threads) as pool:
                futures = [pool.submit(_run_tile_jobs, p, batch,
                                       opts.alpha_min, out, ts)
                           for batch in batches]
                for f in futures:
                    f.result()
    return out


# ---------------------------------------------------------------------------
# oracle path (slow, loop-based, used by equivalence tests)
# ---------------------------------------------------------------------------

def render_oracle(gaussians, pose: CameraPose, K: Intrinsics,
                  opts: RenderOptions | None = None) -> RenderTarget:
    """Reference renderer: per-pixel loop over all depth-sorted Gaussians."""
    if opts is None:
        opts = RenderOptions.native(K)
    cloud = GaussianCloud.coerce(gaussians)
    out = RenderTarget.zeros(opts.height, opts.width)

    entries = []
    for i, g in enumerate(cloud):
        proj = project_gaussian(g, pose, K, opts)
        if proj is None:
            # reproduce the fast path's bookkeeping split
            R = pose.rotation()
            d = float((R @ g.mu + pose.trans)[2])
            if opts.near < d < opts.far:
                out.num_rejected += 1
            continue
        mean2d, cov2d, depth = proj
        a, b, c = cov2d[0, 0], cov2d[0, 1], cov2d[1, 1]
        det = a * c - b * b
        if not det > 1e-12:
            out.num_skipped += 1
            continue
        if g.alpha < opts.alpha_min:
            out.num_rejected += 1
            continue
        entries.append((depth, i, mean2d[0], mean2d[1],
                        c / det, -b / det, a / det, g.alpha,
                        g.color, g.v_fwd, g.v_bwd))
    entries.sort(key=lambda e: e[0])  # python sort is stable, as is the fast path

    amin = opts.alpha_min
    for row in range(opts.height):
        for col in range(opts.width):
            T = 1.0
            r = gch = bch = 0.0
            dsum = 0.0
            vfx = vfy = vfz = 0.0
            vbx = vby = vbz = 0.0
            for depth, _i, u, v, ca, cb, cc, alpha, color, vf, vb in entries:
                dx = u - col
                dy = v - row
                q = 0.5 * (ca * dx * dx + cc * dy * dy) + cb * dx * dy
                w = alpha * math.exp(-q)
                if w < amin:
                    continue
                contrib = w * T
                r += contrib * color[0]
                gch += contrib * color[1]
                bch += contrib * color[2]
                dsum += contrib * depth
                vfx += contrib * vf[0]
                vfy += contrib * vf[1]
                vfz += contrib * vf[2]
                vbx += contrib * vb[0]
                vby += contrib * vb[1]
                vbz += contrib * vb[2]
                T *= 1.0 - w
                if T < _T_CUTOFF:
                    break
            acc = 1.0 - T
            out.rgb[row, col] = (r, gch, bch)
            out.acc_opacity[row, col] = acc
            out.depth[row, col] = dsum / acc if acc >= _ACC_FLOOR else 0.0
            out.vel_fwd[row, col] = (vfx, vfy, vfz)
            out.vel_bwd[row, col] = (vbx, vby, vbz)
    return out
