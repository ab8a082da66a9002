"""End-to-end CLI behavior: files written, summaries printed, exit codes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from splat4d import (
    InterpConfig,
    RenderOptions,
    Trajectory,
    interpolate_field,
    read_depth,
    read_ground_truth,
    read_image,
    read_mask,
    read_scene,
    read_separation,
    read_trajectory,
    render,
    write_image,
    write_trajectory,
)
from splat4d.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(stdout: str) -> dict:
    """Parse the last key=value summary line."""
    line = [l for l in stdout.strip().splitlines() if "=" in l][-1]
    return dict(pair.split("=", 1) for pair in line.split())


def dir_digest(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


@pytest.fixture
def scene_dir(tmp_path, capsys):
    out = tmp_path / "scene"
    code = main(["synth", "--out", str(out), "--seed", "3", "--static", "4",
                 "--dynamic", "1", "--motion", "linear", "--keyframes", "4"])
    capsys.readouterr()
    assert code == 0
    return out


def keyframe_trajectory(scene_dir, tmp_path):
    scene = read_scene(scene_dir)
    traj = Trajectory(tuple(kf.camera for kf in scene.keyframes), scene.intrinsics)
    path = tmp_path / "kf_traj.json"
    write_trajectory(path, traj)
    return path, scene


class TestSynth:
    def test_writes_scene_and_ground_truth(self, tmp_path, capsys):
        out = tmp_path / "s"
        code, stdout, _ = run(capsys, "synth", "--out", str(out), "--seed", "1")
        assert code == 0
        assert (out / "scene.json").exists()
        assert (out / "keyframe_0000.ply").exists()
        assert (out / "ground_truth.json").exists()
        assert kv(stdout)["keyframes"] == "5"

    def test_same_seed_identical_directory(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, "synth", "--out", str(a), "--seed", "9")
        run(capsys, "synth", "--out", str(b), "--seed", "9")
        assert dir_digest(a) == dir_digest(b)

    def test_zero_dynamic_reflected_in_sidecar(self, tmp_path, capsys):
        out = tmp_path / "s"
        code, stdout, _ = run(capsys, "synth", "--out", str(out), "--dynamic", "0")
        assert code == 0
        assert kv(stdout)["dynamic"] == "0"
        gt = read_ground_truth(out / "ground_truth.json")
        assert all(label == "static" for label in gt.labels())

    def test_invalid_spec_exits_2(self, tmp_path, capsys):
        code, _, err = run(capsys, "synth", "--out", str(tmp_path / "x"),
                           "--keyframes", "0")
        assert code == 2
        assert "invalid synthetic spec" in err


class TestRender:
    def test_keyframe_trajectory_reproduces_keyframe_renders(self, scene_dir,
                                                             tmp_path, capsys):
        traj_path, scene = keyframe_trajectory(scene_dir, tmp_path)
        out = tmp_path / "frames"
        code, stdout, _ = run(capsys, "render", "--scene", str(scene_dir),
                              "--traj", str(traj_path), "--out", str(out),
                              "--threads", "2")
        assert code == 0
        opts = RenderOptions.native(scene.intrinsics, threads=2)
        for k, kf in enumerate(scene.keyframes):
            direct = render(kf.gaussians, kf.camera, scene.intrinsics, opts)
            ref = tmp_path / f"ref_{k}.png"
            write_image(ref, direct.rgb)
            assert ref.read_bytes() == (out / f"rgb_{k:04d}.png").read_bytes()
            np.testing.assert_array_equal(
                read_depth(out / f"depth_{k:04d}.pfm"),
                direct.depth.astype(np.float32))

    def test_resolution_override_doubles_dimensions(self, scene_dir, tmp_path, capsys):
        traj_path, scene = keyframe_trajectory(scene_dir, tmp_path)
        out = tmp_path / "frames2x"
        code, stdout, _ = run(capsys, "render", "--scene", str(scene_dir),
                              "--traj", str(traj_path), "--out", str(out),
                              "--width", "128", "--height", "128")
        assert code == 0
        img = read_image(out / "rgb_0000.png")
        assert img.shape == (128, 128, 3)

    def test_out_of_range_time_exits_3(self, scene_dir, tmp_path, capsys):
        scene = read_scene(scene_dir)
        bad_pose = scene.keyframes[0].camera
        from splat4d import CameraPose
        late = CameraPose(bad_pose.quat, bad_pose.trans, 99.5)
        traj_path = tmp_path / "bad.json"
        write_trajectory(traj_path, Trajectory((late,), scene.intrinsics))
        code, _, err = run(capsys, "render", "--scene", str(scene_dir),
                           "--traj", str(traj_path), "--out", str(tmp_path / "o"))
        assert code == 3
        assert "99.5" in err


class TestDegrade:
    def test_zero_perturbation_cull_matches_clean_render(self, scene_dir,
                                                         tmp_path, capsys):
        traj_path, scene = keyframe_trajectory(scene_dir, tmp_path)
        out = tmp_path / "pack"
        code, stdout, _ = run(capsys, "degrade", "--scene", str(scene_dir),
                              "--traj", str(traj_path), "--out", str(out),
                              "--mode", "cull", "--max-translation", "0",
                              "--max-rotation", "0", "--lookat-blend", "0")
        assert code == 0
        field = interpolate_field(scene, scene.keyframes[0].time, InterpConfig())
        clean = render(field, scene.keyframes[0].camera, scene.intrinsics)
        ref = tmp_path / "clean.png"
        write_image(ref, clean.rgb)
        assert ref.read_bytes() == (out / "rgb_0000.png").read_bytes()
        manifest = json.loads((out / "pack.json").read_text())
        assert manifest["culled_counts"][0] == 0

    def test_larger_kernel_reports_larger_displacement(self, scene_dir,
                                                       tmp_path, capsys):
        traj_path, _ = keyframe_trajectory(scene_dir, tmp_path)
        stats = {}
        for kernel in (3, 9):
            out = tmp_path / f"pack{kernel}"
            code, stdout, _ = run(capsys, "degrade", "--scene", str(scene_dir),
                                  "--traj", str(traj_path), "--out", str(out),
                                  "--mode", "filter", "--kernel", str(kernel),
                                  "--seed", "5")
            assert code == 0
            stats[kernel] = float(kv(stdout)["mean_displacement"])
        assert stats[9] > stats[3]

    def test_fixed_seed_identical_pack_across_threads(self, scene_dir, tmp_path,
                                                      capsys):
        traj_path, _ = keyframe_trajectory(scene_dir, tmp_path)
        a, b = tmp_path / "pa", tmp_path / "pb"
        for out, threads in ((a, "1"), (b, "4")):
            code, _, _ = run(capsys, "degrade", "--scene", str(scene_dir),
                             "--traj", str(traj_path), "--out", str(out),
                             "--mode", "both", "--seed", "11",
                             "--threads", threads)
            assert code == 0
        assert dir_digest(a) == dir_digest(b)

    def test_even_kernel_exits_2(self, scene_dir, tmp_path, capsys):
        traj_path, _ = keyframe_trajectory(scene_dir, tmp_path)
        code, _, err = run(capsys, "degrade", "--scene", str(scene_dir),
                           "--traj", str(traj_path), "--out", str(tmp_path / "p"),
                           "--kernel", "4")
        assert code == 2
        assert "odd" in err


class TestSeparate:
    def test_static_scene_reports_all_static(self, tmp_path, capsys):
        scene_out = tmp_path / "static_scene"
        run(capsys, "synth", "--out", str(scene_out), "--dynamic", "0",
            "--static", "5", "--seed", "2")
        sidecar = tmp_path / "sep.txt"
        code, stdout, _ = run(capsys, "separate", "--scene", str(scene_out),
                              "--out", str(sidecar))
        assert code == 0
        summary = kv(stdout)
        assert summary["dynamic"] == "0"
        assert int(summary["static"]) > 0

    def test_half_static_object_reported_dynamic(self, tmp_path, capsys):
        scene_out = tmp_path / "half"
        run(capsys, "synth", "--out", str(scene_out), "--static", "3",
            "--dynamic", "1", "--motion", "half_static", "--keyframes", "6",
            "--seed", "13")
        sidecar = tmp_path / "sep.txt"
        code, _, _ = run(capsys, "separate", "--scene", str(scene_out),
                         "--out", str(sidecar))
        assert code == 0
        gt = read_ground_truth(scene_out / "ground_truth.json")
        mover = gt.labels().index("dynamic")
        result = read_separation(sidecar)
        assert all(mover in ids for ids in result.dynamic_ids)

    def test_huge_eta_all_static(self, scene_dir, tmp_path, capsys):
        code, stdout, _ = run(capsys, "separate", "--scene", str(scene_dir),
                              "--out", str(tmp_path / "s.txt"), "--eta", "1e18")
        assert code == 0
        assert kv(stdout)["dynamic"] == "0"


class TestTrack:
    def test_constant_velocity_tracks_match_ground_truth(self, tmp_path, capsys):
        scene_out = tmp_path / "cv"
        run(capsys, "synth", "--out", str(scene_out), "--static", "0",
            "--dynamic", "2", "--motion", "linear", "--keyframes", "5",
            "--seed", "7")
        out = tmp_path / "tracks.txt"
        code, stdout, _ = run(capsys, "track", "--scene", str(scene_out),
                              "--radius", "0.5", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().splitlines()
        summary = kv(stdout)
        assert int(summary["tracks"]) == 2
        assert len(lines) == int(summary["lines"]) == 2 * 5
        for line in lines:
            tid, frame, gidx, x, y, z = line.split()
            assert tid == gidx  # object k stays associated with itself

    def test_tiny_radius_gives_singleton_tracks(self, tmp_path, capsys):
        # stored velocities deliberately disagree with the displacements,
        # so every prediction misses and every track dies immediately
        from splat4d import (CameraPose, GaussianCloud, Intrinsics,
                             KeyframeField, Scene, write_scene)
        from conftest import lone_gaussian
        K = Intrinsics(64.0, 64.0, 31.5, 31.5, 64, 64)
        kf = lambda t, gs: KeyframeField(
            time=t, gaussians=GaussianCloud.from_gaussians(gs),
            camera=CameraPose((1.0, 0, 0, 0), (0, 0, 0), t))
        scene = Scene(intrinsics=K, keyframes=(
            kf(0.0, [lone_gaussian(mu=(0, 0, 5), v_fwd=np.array([1.0, 0, 0])),
                     lone_gaussian(mu=(1, 1, 5), v_fwd=np.array([0.0, 1.0, 0]))]),
            kf(1.0, [lone_gaussian(mu=(0.5, 0, 5)),
                     lone_gaussian(mu=(1, 1.5, 5))]),
        ))
        scene_out = tmp_path / "mismatch"
        write_scene(scene_out, scene)
        out = tmp_path / "tracks.txt"
        code, stdout, _ = run(capsys, "track", "--scene", str(scene_out),
                              "--radius", "1e-12", "--out", str(out))
        assert code == 0
        summary = kv(stdout)
        assert int(summary["tracks"]) == int(summary["lines"]) == 4

    def test_single_keyframe_scene_exits_2(self, tmp_path, capsys):
        scene_out = tmp_path / "single"
        run(capsys, "synth", "--out", str(scene_out), "--keyframes", "1")
        code, _, err = run(capsys, "track", "--scene", str(scene_out),
                           "--radius", "1.0", "--out", str(tmp_path / "t.txt"))
        assert code == 2
        assert "2 keyframes" in err


class TestStabilize:
    def make_jittered_traj(self, tmp_path, noise=0.05):
        from splat4d import CameraPose, Intrinsics
        rng = np.random.default_rng(3)
        K = Intrinsics(64.0, 64.0, 31.5, 31.5, 64, 64)
        poses = tuple(
            CameraPose.from_center(
                (1.0, 0, 0, 0),
                np.array([0.2 * i, 0.0, 0.0]) + rng.normal(0, noise, 3), float(i))
            for i in range(30))
        path = tmp_path / "jitter.json"
        write_trajectory(path, Trajectory(poses, K))
        return path

    def test_window_one_is_identity(self, tmp_path, capsys):
        traj = self.make_jittered_traj(tmp_path)
        out = tmp_path / "smooth.json"
        code, stdout, _ = run(capsys, "stabilize", "--traj", str(traj),
                              "--out", str(out), "--window", "1")
        assert code == 0
        assert traj.read_bytes() == out.read_bytes()

    def test_jerk_reduction_reported(self, tmp_path, capsys):
        traj = self.make_jittered_traj(tmp_path)
        out = tmp_path / "smooth.json"
        code, stdout, _ = run(capsys, "stabilize", "--traj", str(traj),
                              "--out", str(out), "--window", "5")
        assert code == 0
        assert float(kv(stdout)["reduction_pct"]) >= 50.0
        read_trajectory(out)  # output is a valid trajectory file

    def test_linear_path_nothing_to_remove(self, tmp_path, capsys):
        traj = self.make_jittered_traj(tmp_path, noise=0.0)
        out = tmp_path / "smooth.json"
        code, stdout, _ = run(capsys, "stabilize", "--traj", str(traj),
                              "--out", str(out), "--window", "5")
        assert code == 0
        assert abs(float(kv(stdout)["reduction_pct"])) < 5.0

    def test_even_window_exits_2(self, tmp_path, capsys):
        traj = self.make_jittered_traj(tmp_path)
        code, _, err = run(capsys, "stabilize", "--traj", str(traj),
                           "--out", str(tmp_path / "s.json"), "--window", "4")
        assert code == 2
        assert "odd" in err


class TestEval:
    def write_frames(self, directory, images):
        directory.mkdir(parents=True, exist_ok=True)
        for name, img in images.items():
            write_image(directory / name, img)

    def test_self_comparison_hits_caps(self, tmp_path, capsys, rng):
        imgs = {f"f_{i}.png": rng.uniform(0, 1, (32, 32, 3)) for i in range(3)}
        self.write_frames(tmp_path / "ref", imgs)
        self.write_frames(tmp_path / "test", imgs)
        code, stdout, _ = run(capsys, "eval", "--ref", str(tmp_path / "ref"),
                              "--test", str(tmp_path / "test"))
        assert code == 0
        summary = kv(stdout)
        assert float(summary["mean_psnr"]) == 100.0
        assert abs(float(summary["mean_ssim"]) - 1.0) < 1e-6
        assert summary["frames"] == "3"

    def test_uniform_offset_near_20_db(self, tmp_path, capsys, rng):
        base = rng.uniform(0.0, 0.85, (32, 32, 3))
        self.write_frames(tmp_path / "ref", {"a.png": base})
        self.write_frames(tmp_path / "test", {"a.png": base + 0.1})
        code, stdout, _ = run(capsys, "eval", "--ref", str(tmp_path / "ref"),
                              "--test", str(tmp_path / "test"))
        assert code == 0
        # 8-bit quantization of the written PNGs costs a fraction of a dB
        assert abs(float(kv(stdout)["mean_psnr"]) - 20.0) < 0.2

    def test_unmatched_frames_exit_2(self, tmp_path, capsys, rng):
        img = rng.uniform(0, 1, (16, 16, 3))
        self.write_frames(tmp_path / "ref", {"a.png": img, "b.png": img})
        self.write_frames(tmp_path / "test", {"a.png": img})
        code, _, err = run(capsys, "eval", "--ref", str(tmp_path / "ref"),
                           "--test", str(tmp_path / "test"))
        assert code == 2
        assert "b.png" in err


def test_missing_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_env_var_thread_default(scene_dir, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SPLAT4D_THREADS", "2")
    traj_path, _ = keyframe_trajectory(scene_dir, tmp_path)
    code, _, _ = run(capsys, "render", "--scene", str(scene_dir),
                     "--traj", str(traj_path), "--out", str(tmp_path / "f"))
    assert code == 0
