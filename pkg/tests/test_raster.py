"""Renderer contracts: oracle equivalence, determinism, compositing laws."""

from __future__ import annotations

import numpy as np
import pytest

from splat4d import (
    CameraPose,
    GaussianCloud,
    Intrinsics,
    RenderOptions,
    binarize_mask,
    project_gaussian,
    psnr,
    render,
    render_oracle,
)
from conftest import identity_pose, lone_gaussian, random_cloud, small_intrinsics


def assert_targets_close(a, b, atol):
    np.testing.assert_allclose(a.rgb, b.rgb, rtol=0, atol=atol)
    np.testing.assert_allclose(a.depth, b.depth, rtol=0, atol=atol)
    np.testing.assert_allclose(a.acc_opacity, b.acc_opacity, rtol=0, atol=atol)
    np.testing.assert_allclose(a.vel_fwd, b.vel_fwd, rtol=0, atol=atol)
    np.testing.assert_allclose(a.vel_bwd, b.vel_bwd, rtol=0, atol=atol)


def assert_targets_equal(a, b):
    np.testing.assert_array_equal(a.rgb, b.rgb)
    np.testing.assert_array_equal(a.depth, b.depth)
    np.testing.assert_array_equal(a.acc_opacity, b.acc_opacity)
    np.testing.assert_array_equal(a.vel_fwd, b.vel_fwd)
    np.testing.assert_array_equal(a.vel_bwd, b.vel_bwd)


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

class TestProjectGaussian:
    K = Intrinsics(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=101, height=101)

    def test_on_axis_isotropic(self):
        g = lone_gaussian(mu=(0, 0, 4), scale=0.3,
                          rot=np.array([np.cos(0.4), np.sin(0.4), 0, 0]))
        mean2d, cov2d, depth = project_gaussian(g, identity_pose(), self.K)
        np.testing.assert_allclose(mean2d, [50, 50])
        assert depth == 4.0
        # rotating an isotropic Gaussian cannot break screen-space isotropy
        np.testing.assert_allclose(cov2d[0, 0], cov2d[1, 1], atol=1e-6)
        np.testing.assert_allclose(cov2d[0, 1], 0.0, atol=1e-6)
        # on-axis: cov = (s * fx / z)^2 + dilation
        np.testing.assert_allclose(cov2d[0, 0], (0.3 * 100 / 4) ** 2 + 0.3, atol=1e-9)

    def test_doubling_fx_doubles_screen_sigma(self):
        g = lone_gaussian(mu=(0, 0, 4), scale=0.3)
        K2 = Intrinsics(fx=200.0, fy=200.0, cx=50.0, cy=50.0, width=101, height=101)
        _, cov1, _ = project_gaussian(g, identity_pose(), self.K)
        _, cov2, _ = project_gaussian(g, identity_pose(), K2)
        s1 = np.sqrt(cov1[0, 0] - 0.3)
        s2 = np.sqrt(cov2[0, 0] - 0.3)
        np.testing.assert_allclose(s2, 2.0 * s1, rtol=1e-12)

    def test_depth_clipping(self):
        opts = RenderOptions.native(self.K, near=1.0, far=10.0)
        assert project_gaussian(lone_gaussian(mu=(0, 0, 0.5)), identity_pose(),
                                self.K, opts) is None
        assert project_gaussian(lone_gaussian(mu=(0, 0, 20.0)), identity_pose(),
                                self.K, opts) is None
        assert project_gaussian(lone_gaussian(mu=(0, 0, 5.0)), identity_pose(),
                                self.K, opts) is not None

    def test_far_off_image_rejected(self):
        g = lone_gaussian(mu=(50.0, 0, 2.0), scale=0.05)
        assert project_gaussian(g, identity_pose(), self.K) is None


# ---------------------------------------------------------------------------
# render basics
# ---------------------------------------------------------------------------

class TestRenderBasics:
    def test_empty_scene_is_black(self):
        K = small_intrinsics()
        out = render(GaussianCloud.empty(), identity_pose(), K)
        assert out.rgb.shape == (16, 16, 3)
        assert np.all(out.rgb == 0)
        assert np.all(out.acc_opacity == 0)
        assert np.all(out.depth == 0)

    def test_saturating_gaussian_fills_view(self):
        K = small_intrinsics()
        g = lone_gaussian(mu=(0, 0, 2), alpha=0.99999, scale=50.0, color=(0.3, 0.6, 0.9))
        out = render([g], identity_pose(), K)
        np.testing.assert_allclose(out.rgb, np.broadcast_to([0.3, 0.6, 0.9], (16, 16, 3)),
                                   atol=1e-3)
        assert np.all(out.acc_opacity >= 0.99)

    def test_behind_camera_scene_renders_nothing(self, rng):
        K = small_intrinsics()
        cloud = random_cloud(rng, 16, depth_range=(-6.0, -2.0))
        out = render(cloud, identity_pose(), K)
        assert np.all(out.rgb == 0)
        assert np.all(out.acc_opacity == 0)
        assert np.all(out.vel_fwd == 0)

    def test_occluder_hides_everything_behind(self):
        K = small_intrinsics()
        occluder = lone_gaussian(mu=(0, 0, 2), alpha=1.0, scale=50.0, color=(1, 0, 0))
        hidden = lone_gaussian(mu=(0, 0, 5), alpha=0.9, scale=50.0, color=(0, 1, 0))
        just_front = render([occluder], identity_pose(), K)
        both = render([occluder, hidden], identity_pose(), K)
        # leakage bounded by the alpha_min cutoff
        np.testing.assert_allclose(both.rgb, just_front.rgb, atol=1.0 / 255.0)

    def test_velocity_buffers_composite_like_color(self, rng):
        K = small_intrinsics()
        cloud = random_cloud(rng, 12)
        vel = cloud.color.copy()  # reuse colors as velocities
        cloud = cloud.replace(v_fwd=vel, v_bwd=0.5 * vel)
        out = render(cloud, identity_pose(), K)
        np.testing.assert_array_equal(out.vel_fwd, out.rgb)
        np.testing.assert_allclose(out.vel_bwd, 0.5 * out.rgb, atol=1e-15)

    def test_degenerate_covariance_skipped_and_counted(self):
        K = small_intrinsics()
        bad = lone_gaussian(mu=(0, 0, 3), scale=1e200)
        good = lone_gaussian(mu=(0, 0, 3), color=(0.2, 0.4, 0.6))
        out = render([bad, good], identity_pose(), K)
        assert out.num_skipped == 1
        only_good = render([good], identity_pose(), K)
        assert_targets_equal(out, only_good)


# ---------------------------------------------------------------------------
# oracle equivalence and determinism
# ---------------------------------------------------------------------------

class TestOracleEquivalence:
    def test_random_scenes_match_oracle(self):
        K = small_intrinsics()
        pose = identity_pose()
        for seed in range(20):
            rng = np.random.default_rng(seed)
            cloud = random_cloud(rng, int(rng.integers(1, 33)))
            fast = render(cloud, pose, K)
            slow = render_oracle(cloud, pose, K)
            assert_targets_close(fast, slow, atol=1e-5)

    def test_posed_camera_matches_oracle(self, rng):
        K = small_intrinsics()
        from splat4d import axis_angle_to_quat
        pose = CameraPose(quat=axis_angle_to_quat([0.2, -0.1, 0.3]),
                          trans=[0.2, -0.3, 0.5], time=0.0)
        cloud = random_cloud(rng, 24)
        assert_targets_close(render(cloud, pose, K), render_oracle(cloud, pose, K),
                             atol=1e-5)


class TestDeterminism:
    def test_repeat_render_bitwise_identical(self, rng):
        K = small_intrinsics()
        cloud = random_cloud(rng, 24)
        assert_targets_equal(render(cloud, identity_pose(), K),
                             render(cloud, identity_pose(), K))

    def test_tile_sizes_agree(self, rng):
        K = Intrinsics(fx=40.0, fy=40.0, cx=23.5, cy=15.5, width=48, height=32)
        cloud = random_cloud(rng, 64)
        outs = [render(cloud, identity_pose(), K,
                       RenderOptions.native(K, tile_size=ts))
                for ts in (8, 16, 32)]
        assert_targets_close(outs[0], outs[1], atol=1e-6)
        assert_targets_close(outs[0], outs[2], atol=1e-6)

    def test_thread_counts_agree_bitwise(self, rng):
        K = Intrinsics(fx=40.0, fy=40.0, cx=23.5, cy=15.5, width=48, height=32)
        cloud = random_cloud(rng, 64)
        one = render(cloud, identity_pose(), K, RenderOptions.native(K, threads=1))
        eight = render(cloud, identity_pose(), K, RenderOptions.native(K, threads=8))
        assert_targets_equal(one, eight)


class TestResolutionConsistency:
    def test_upscaled_render_box_downsamples_to_native(self, rng):
        # smooth scene: a few large soft Gaussians
        K = Intrinsics(fx=64.0, fy=64.0, cx=31.5, cy=31.5, width=64, height=64)
        cloud = random_cloud(rng, 6, scale_range=(0.6, 1.2), alpha_range=(0.5, 0.9))
        native = render(cloud, identity_pose(), K)
        doubled = render(cloud, identity_pose(), K,
                         RenderOptions(width=128, height=128))
        assert doubled.rgb.shape == (128, 128, 3)
        down = doubled.rgb.reshape(64, 2, 64, 2, 3).mean(axis=(1, 3))
        assert psnr(down, native.rgb) >= 30.0


class TestBinarizeMask:
    def test_all_zero_map(self):
        assert not binarize_mask(np.zeros((4, 4)), 0.5).any()

    def test_boundary_is_inclusive(self):
        m = binarize_mask(np.full((2, 2), 0.5), 0.5)
        assert m.all()

    def test_threshold_must_be_in_open_interval(self):
        with pytest.raises(ValueError):
            binarize_mask(np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError):
            binarize_mask(np.zeros((2, 2)), 1.0)


class TestRenderOptionsValidation:
    def test_bad_near_far(self):
        with pytest.raises(ValueError):
            RenderOptions(width=8, height=8, near=0.0)
        with pytest.raises(ValueError):
            RenderOptions(width=8, height=8, near=2.0, far=1.0)

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            RenderOptions(width=0, height=8)
