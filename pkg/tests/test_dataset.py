"""Scene generation, trajectory bounds, rendering oracle, splits, persistence."""

import numpy as np
import pytest

from sempose import dataset as dsm
from sempose import geometry as geo
from sempose.channel import feedback_to_snr
from sempose.errors import ConfigurationError, DataIOError


def small_cfg(**over):
    base = dict(landmarks=16, feature_dim=32, seed=3)
    base.update(over)
    return dsm.SceneConfig(**base)


def test_scene_deterministic_and_in_bounds():
    cfg = small_cfg()
    a = dsm.generate_scene(cfg)
    b = dsm.generate_scene(cfg)
    assert np.array_equal(a.landmarks, b.landmarks)
    assert np.all(a.landmarks >= 0.0)
    assert np.all(a.landmarks <= np.asarray(cfg.room))
    c = dsm.generate_scene(small_cfg(seed=4))
    assert not np.array_equal(a.landmarks, c.landmarks)


def test_trajectory_positions_inside_room():
    cfg = small_cfg()
    poses = dsm.generate_trajectory(cfg, 2000)
    assert np.all(poses[:, :3] >= 0.0)
    assert np.all(poses[:, :3] <= np.asarray(cfg.room))


def test_trajectory_rotation_step_bound():
    cfg = small_cfg(max_step_deg=10.0)
    poses = dsm.generate_trajectory(cfg, 1500)
    for t in range(1, len(poses)):
        ang = geo.angular_distance_deg(poses[t - 1, 3:7], poses[t, 3:7])
        assert ang <= 10.0 + 1e-6


def test_trajectory_zero_angular_velocity_constant_orientation():
    cfg = small_cfg(max_step_deg=0.0)
    poses = dsm.generate_trajectory(cfg, 200)
    assert np.allclose(poses[:, 3:7], poses[0, 3:7])


def test_trajectory_quaternions_unit_norm():
    poses = dsm.generate_trajectory(small_cfg(), 500)
    norms = np.linalg.norm(poses[:, 3:7], axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-6)


def test_render_projection_matches_independent_pinhole():
    """Independent oracle: homogeneous-matrix pinhole projection."""
    cfg = small_cfg(feature_noise_std=0.0, imu_noise_std=0.0, shadowing_std_db=0.0)
    scene = dsm.generate_scene(cfg)
    poses = dsm.generate_trajectory(cfg, 300)
    rng = np.random.default_rng(0)
    slots = cfg.feature_dim // 2

    def oracle(pose):
        R = geo.quat_rotation_matrix(pose[3:7])
        # world->camera extrinsic as a 3x4 matrix acting on homogeneous points
        E = np.hstack([R.T, (-R.T @ pose[:3])[:, None]])
        expected = np.zeros(2 * slots)
        for j in range(slots):
            pc = E @ np.append(scene.landmarks[j], 1.0)
            if pc[2] > cfg.z_near:
                u, v = pc[0] / pc[2], pc[1] / pc[2]
                if abs(u) <= cfg.fov_tan and abs(v) <= cfg.fov_tan:
                    expected[2 * j] = 2.0 + u
                    expected[2 * j + 1] = 2.0 + v
        return expected

    rich = 0
    for t in range(1, len(poses)):
        feats, _, _, _ = dsm.render_observation(poses[t - 1], poses[t], scene, cfg, rng)
        expected = oracle(poses[t])
        assert np.allclose(feats, expected, atol=1e-9)
        if np.count_nonzero(expected) >= 6:
            rich += 1
    assert rich > 10  # plenty of landmark-rich viewpoints along the walk


def test_render_identity_imu_for_static_pose():
    cfg = small_cfg(feature_noise_std=0.0, imu_noise_std=0.0, shadowing_std_db=0.0)
    scene = dsm.generate_scene(cfg)
    poses = dsm.generate_trajectory(cfg, 5)
    _, imu, _, _ = dsm.render_observation(poses[2], poses[2], scene, cfg, np.random.default_rng(0))
    assert np.allclose(imu, [1, 0, 0, 0], atol=1e-9)


def test_render_rsrp_reference_at_one_meter():
    cfg = small_cfg(
        ref_rsrp_dbm=-40.0, shadowing_std_db=0.0, feature_noise_std=0.0, imu_noise_std=0.0,
        ap_position=(1.0, 1.0, 1.0),
    )
    scene = dsm.generate_scene(cfg)
    pose = np.array([2.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0])  # exactly 1 m from the AP
    _, _, rsrp, snr = dsm.render_observation(pose, pose, scene, cfg, np.random.default_rng(0))
    assert rsrp == pytest.approx(-40.0, abs=1e-9)
    assert snr == pytest.approx(feedback_to_snr(-40.0, cfg.noise_floor_dbm), rel=1e-12)


def test_rsrp_strictly_decreasing_with_distance():
    cfg = small_cfg(shadowing_std_db=0.0, ap_position=(0.0, 0.0, 0.0))
    scene = dsm.generate_scene(cfg)
    rng = np.random.default_rng(0)
    rsrps = []
    for d in (0.5, 1.0, 2.0, 4.0):
        pose = np.array([d, 0, 0, 1, 0, 0, 0])
        _, _, rsrp, _ = dsm.render_observation(pose, pose, scene, cfg, rng)
        rsrps.append(rsrp)
    assert all(b < a for a, b in zip(rsrps, rsrps[1:]))


def test_split_sizes_small_and_paper_count():
    assert dsm.split_counts(10) == (6, 2, 2)
    assert dsm.split_counts(67681) == (40609, 13536, 13536)


def test_splits_contiguous_disjoint_covering():
    splits = dsm.make_splits(103)
    all_idx = splits["train"] + splits["val"] + splits["test"]
    assert sorted(all_idx) == list(range(103))
    assert len(set(all_idx)) == 103
    for part in splits.values():
        if part:
            assert part == list(range(part[0], part[-1] + 1))
    assert splits["train"][-1] + 1 == splits["val"][0]
    assert splits["val"][-1] + 1 == splits["test"][0]


def test_split_invalid_ratios():
    with pytest.raises(ConfigurationError):
        dsm.split_counts(10, (0.5, 0.2, 0.2))


def test_generation_deterministic():
    cfg = small_cfg()
    a = dsm.generate_dataset(cfg, 64)
    b = dsm.generate_dataset(cfg, 64)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.imu, b.imu)
    assert np.array_equal(a.radio, b.radio)
    assert np.array_equal(a.poses, b.poses)


def test_generated_imu_unit_norm_and_snr_consistent():
    cfg = small_cfg()
    ds = dsm.generate_dataset(cfg, 128)
    norms = np.linalg.norm(ds.imu.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-6)
    snr_again = np.array(
        [feedback_to_snr(r, cfg.noise_floor_dbm) for r in ds.radio[:, 0].astype(np.float64)]
    )
    assert np.allclose(ds.radio[:, 1], snr_again, rtol=1e-4)
    room = np.asarray(cfg.room)
    assert np.all(ds.poses[:, :3] >= -1e-6)
    assert np.all(ds.poses[:, :3] <= room + 1e-6)


def test_save_load_roundtrip(tmp_path):
    cfg = small_cfg()
    ds = dsm.generate_dataset(cfg, 50)
    dsm.save_dataset(ds, tmp_path / "data")
    again = dsm.load_dataset(tmp_path / "data")
    assert np.array_equal(again.features, ds.features)
    assert np.array_equal(again.imu, ds.imu)
    assert np.array_equal(again.radio, ds.radio)
    assert np.array_equal(again.poses, ds.poses)
    assert again.splits == ds.splits
    assert again.scene_cfg == ds.scene_cfg


def test_load_corrupted_blob_reports_byte_counts(tmp_path):
    ds = dsm.generate_dataset(small_cfg(), 10)
    dsm.save_dataset(ds, tmp_path / "data")
    blob = tmp_path / "data" / "imu.f32"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(DataIOError, match="expected 160 bytes, found 152"):
        dsm.load_dataset(tmp_path / "data")


def test_load_version_mismatch(tmp_path):
    ds = dsm.generate_dataset(small_cfg(), 10)
    dsm.save_dataset(ds, tmp_path / "data")
    manifest = tmp_path / "data" / "manifest.json"
    manifest.write_text(manifest.read_text().replace('"format_version": 1', '"format_version": 7'))
    with pytest.raises(DataIOError, match="version"):
        dsm.load_dataset(tmp_path / "data")


def test_record_view():
    ds = dsm.generate_dataset(small_cfg(), 12)
    rec = ds.record(5)
    assert rec.index == 5
    assert rec.features.shape == (32,)
    assert abs(np.linalg.norm(rec.pose.orientation) - 1.0) < 1e-6


def test_export_csv(tmp_path):
    ds = dsm.generate_dataset(small_cfg(), 8)
    out = dsm.export_csv(ds, tmp_path / "dump.csv", limit=5)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 6  # header + 5 rows
    assert lines[0].startswith("index,rsrp_dbm,snr_linear,px")


def test_default_scene_snr_band_exercises_the_channel():
    """Default config must span SNRs where 1/SNR noise actually matters."""
    ds = dsm.generate_dataset(dsm.SceneConfig(seed=1), 3000)
    snr_db = ds.snr_db()
    assert snr_db.min() < 5.0
    assert snr_db.max() > 8.0
    assert snr_db.max() - snr_db.min() > 8.0
