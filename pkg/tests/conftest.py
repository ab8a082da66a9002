"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from splat4d import CameraPose, GaussianCloud, Gaussian4D, Intrinsics, quat_normalize


def identity_pose(time: float = 0.0) -> CameraPose:
    return CameraPose(quat=(1.0, 0.0, 0.0, 0.0), trans=(0.0, 0.0, 0.0), time=time)


def small_intrinsics() -> Intrinsics:
    """16x16 test camera used by the renderer equivalence scenes."""
    return Intrinsics(fx=20.0, fy=20.0, cx=7.5, cy=7.5, width=16, height=16)


def random_cloud(rng: np.random.Generator, n: int, depth_range=(2.0, 6.0),
                 lateral: float = 1.2, scale_range=(0.03, 0.45),
                 alpha_range=(0.05, 0.999)) -> GaussianCloud:
    """Random Gaussians in front of an identity camera."""
    return GaussianCloud(
        mu=np.column_stack([
            rng.uniform(-lateral, lateral, n),
            rng.uniform(-lateral, lateral, n),
            rng.uniform(*depth_range, n),
        ]),
        alpha=rng.uniform(*alpha_range, n),
        rot=quat_normalize(rng.normal(size=(n, 4))),
        scale=rng.uniform(*scale_range, (n, 3)),
        color=rng.uniform(0.0, 1.0, (n, 3)),
        tau=rng.uniform(0.2, 0.8, n),
        v_fwd=rng.normal(0.0, 0.2, (n, 3)),
        v_bwd=rng.normal(0.0, 0.2, (n, 3)),
        w_fwd=rng.normal(0.0, 0.2, (n, 3)),
        w_bwd=rng.normal(0.0, 0.2, (n, 3)),
    )


def lone_gaussian(mu=(0.0, 0.0, 4.0), alpha=0.9, scale=0.25, color=(0.8, 0.4, 0.2),
                  tau=0.5, rot=(1.0, 0.0, 0.0, 0.0), **velocities) -> Gaussian4D:
    return Gaussian4D(
        mu=np.asarray(mu, dtype=float),
        alpha=alpha,
        rot=rot,
        scale=np.full(3, scale),
        color=np.asarray(color, dtype=float),
        tau=tau,
        **velocities,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
