"""Synthetic data for the pose-over-the-air lab.

A camera walks a smoothed random trajectory through a room scattered with
point landmarks.  Each sample holds the perspective projections of the
landmarks (the visual features), the relative orientation since the previous
frame (the IMU reading), a path-loss-based RSRP reading with its derived SNR,
and the ground-truth pose.  Blobs are little-endian float32; the manifest is
JSON with temporally contiguous train/val/test splits.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from .channel import DEFAULT_NOISE_FLOOR_DBM, feedback_to_snr
from .errors import ConfigurationError, DataIOError

FORMAT_VERSION = 1


@dataclass
class SceneConfig:
    room: tuple = (5.8, 5.2, 3.85)      # meters
    landmarks: int = 32
    ap_position: tuple = (5.5, 4.9, 3.6)
    path_loss_exponent: float = 2.2
    # -75 dBm at 1 m puts sample SNRs in the few-dB-to-~25-dB band where the
    # link noise actually matters; see README for the knob's meaning.
    ref_rsrp_dbm: float = -75.0
    shadowing_std_db: float = 2.0
    feature_noise_std: float = 0.01
    imu_noise_std: float = 0.001
    noise_floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM
    feature_dim: int = 64
    # trajectory shaping: a handheld-style walk (yaw-dominant, camera near
    # standing height) that re-covers the room many times over a capture
    frame_dt_s: float = 1.0 / 30.0
    mean_speed_mps: float = 1.0
    max_step_deg: float = 10.0
    cam_height_m: float = 1.5
    cam_height_wander_m: float = 0.35
    pitch_roll_max_deg: float = 20.0
    # camera
    fov_tan: float = 3.0
    z_near: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if any(d <= 0 for d in self.room):
            raise ConfigurationError(f"room dimensions must be positive, got {self.room}")
        if self.landmarks < 8:
            raise ConfigurationError(f"need at least 8 landmarks, got {self.landmarks}")
        if self.feature_noise_std < 0 or self.imu_noise_std < 0 or self.shadowing_std_db < 0:
            raise ConfigurationError("noise stddevs must be non-negative")
        if self.feature_dim <= 0 or self.feature_dim % 2:
            raise ConfigurationError(f"feature_dim must be a positive even number, got {self.feature_dim}")


@dataclass
class Scene:
    landmarks: np.ndarray   # (L, 3)
    ap_position: np.ndarray  # (3,)


@dataclass
class SampleRecord:
    features: np.ndarray
    imu: np.ndarray
    rsrp_dbm: float
    snr_linear: float
    pose: geo.Pose
    index: int


def generate_scene(cfg):
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xA11CE]))
    room = np.asarray(cfg.room)
    landmarks = rng.uniform(0.0, 1.0, size=(cfg.landmarks, 3)) * room
    return Scene(landmarks=landmarks, ap_position=np.asarray(cfg.ap_position, dtype=float))


def generate_trajectory(cfg, n):
    """Smoothed random walk with wall reflection; per-step rotation <= max_step_deg.

    The walk mimics handheld capture: the camera stays near standing height,
    yaw wanders freely while pitch and roll stay moderate, and the horizontal
    velocity mixes fast enough to re-cover the room many times per session.
    """
    if n < 2:
        raise ConfigurationError(f"trajectory needs at least 2 poses, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x7247]))
    room = np.asarray(cfg.room)
    margin = 0.1
    lo, hi = np.full(3, margin), room - margin
    z_center = float(np.clip(cfg.cam_height_m, lo[2], hi[2]))

    pos = np.array([rng.uniform(lo[0] + 0.3, hi[0] - 0.3),
                    rng.uniform(lo[1] + 0.3, hi[1] - 0.3),
                    z_center])
    vel = rng.normal(0.0, cfg.mean_speed_mps, 3)
    vel[2] *= 0.2
    max_step = np.radians(cfg.max_step_deg)
    pr_max = np.radians(cfg.pitch_roll_max_deg)
    # yaw free, pitch/roll mean-reverting; zero max_step freezes orientation
    yaw = rng.uniform(0.0, 2 * np.pi)
    pitch, roll = rng.uniform(-0.5, 0.5, 2) * pr_max
    yaw_rate = rng.normal(0.0, 0.5 * max_step)

    # base rotation tips the optical axis (body +z) onto the horizon; yaw then
    # spins the gaze around the room, pitch/roll tilt it moderately
    q_level = geo.rotvec_to_quat([np.pi / 2, 0.0, 0.0])

    def compose_quat(yaw_, pitch_, roll_):
        qz = geo.rotvec_to_quat([0.0, 0.0, yaw_])
        qx = geo.rotvec_to_quat([pitch_, 0.0, 0.0])
        qy = geo.rotvec_to_quat([0.0, roll_, 0.0])
        q = geo.quat_mul(qz, geo.quat_mul(q_level, geo.quat_mul(qx, qy)))
        return geo.quat_normalize(q)

    if cfg.max_step_deg == 0:
        pitch = roll = 0.0
    quat = compose_quat(yaw, pitch, roll)
    poses = np.empty((n, 7))
    for t in range(n):
        poses[t, :3] = pos
        poses[t, 3:] = quat
        # position: damped random velocity, reflected at the walls; the
        # vertical component reverts to camera height
        vel[:2] = 0.95 * vel[:2] + rng.normal(0.0, 0.35 * cfg.mean_speed_mps, 2)
        vel[2] = 0.9 * vel[2] + rng.normal(0.0, 0.1 * cfg.mean_speed_mps) \
            + 0.5 * (z_center - pos[2])
        speed = np.linalg.norm(vel)
        if speed > 2.5 * cfg.mean_speed_mps:
            vel *= 2.5 * cfg.mean_speed_mps / speed
        nxt = pos + vel * cfg.frame_dt_s
        zlo = max(lo[2], z_center - cfg.cam_height_wander_m)
        zhi = min(hi[2], z_center + cfg.cam_height_wander_m)
        bounds_lo = np.array([lo[0], lo[1], zlo])
        bounds_hi = np.array([hi[0], hi[1], zhi])
        for axis in range(3):
            if nxt[axis] < bounds_lo[axis]:
                nxt[axis] = 2 * bounds_lo[axis] - nxt[axis]
                vel[axis] = -vel[axis]
            elif nxt[axis] > bounds_hi[axis]:
                nxt[axis] = 2 * bounds_hi[axis] - nxt[axis]
                vel[axis] = -vel[axis]
        pos = np.clip(nxt, bounds_lo, bounds_hi)
        if cfg.max_step_deg > 0:
            # angular step built in (yaw, pitch, roll) increments, clipped so
            # the composed per-frame rotation stays within the bound; yaw
            # drifts toward the room interior the way a person films a scene
            center_bearing = np.arctan2(room[1] / 2 - pos[1], room[0] / 2 - pos[0])
            # gaze azimuth for this composition is yaw - pi/2 (level base looks along -y at yaw 0)
            err = (center_bearing - (yaw - np.pi / 2) + np.pi) % (2 * np.pi) - np.pi
            yaw_rate = 0.92 * yaw_rate + rng.normal(0.0, 0.35 * max_step) + 0.02 * err
            d_yaw = np.clip(yaw_rate, -0.9 * max_step, 0.9 * max_step)
            d_pitch = 0.05 * (-pitch) + rng.normal(0.0, 0.1 * max_step)
            d_roll = 0.05 * (-roll) + rng.normal(0.0, 0.1 * max_step)
            yaw = (yaw + d_yaw) % (2 * np.pi)
            pitch = float(np.clip(pitch + d_pitch, -pr_max, pr_max))
            roll = float(np.clip(roll + d_roll, -pr_max, pr_max))
            new_quat = compose_quat(yaw, pitch, roll)
            # enforce the advertised bound exactly, whatever the composition did
            rel = geo.quat_mul(geo.quat_conj(quat), new_quat)
            step_vec = geo.quat_to_rotvec(rel)
            ang = np.linalg.norm(step_vec)
            if ang > max_step:
                step_vec *= max_step / ang
                new_quat = geo.quat_normalize(geo.quat_mul(quat, geo.rotvec_to_quat(step_vec)))
            quat = new_quat
    return poses


def project_landmarks(pose_row, scene, cfg):
    """Pinhole projections of the first feature_dim/2 landmarks.

    Visible landmarks contribute (2 + u, 2 + v) with u, v the normalized
    image coordinates (strictly positive values); landmarks behind the
    camera or outside the field of view contribute the (0, 0) sentinel, so
    the sign carries the visibility flag.
    """
    slots = cfg.feature_dim // 2
    pts = scene.landmarks[:slots]
    rot = geo.quat_rotation_matrix(pose_row[3:7])
    cam = (pts - pose_row[:3]) @ rot  # world -> camera: R^T (p_w - p)
    feats = np.zeros(2 * slots)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam[:, 0] / cam[:, 2]
        v = cam[:, 1] / cam[:, 2]
    visible = (cam[:, 2] > cfg.z_near) & (np.abs(u) <= cfg.fov_tan) & (np.abs(v) <= cfg.fov_tan)
    feats[0::2][visible] = 2.0 + u[visible]
    feats[1::2][visible] = 2.0 + v[visible]
    return feats, visible


def render_observation(pose_prev_row, pose_row, scene, cfg, rng):
    """One SampleRecord worth of arrays: features, imu, rsrp, snr."""
    if not np.all(np.isfinite(pose_row)) or not np.all(np.isfinite(pose_prev_row)):
        raise ConfigurationError("degenerate pose passed to render_observation")
    feats, visible = project_landmarks(pose_row, scene, cfg)
    if cfg.feature_noise_std > 0:
        noise = rng.normal(0.0, cfg.feature_noise_std, feats.shape)
        mask = np.repeat(visible, 2)
        feats[mask] += noise[mask]

    rel = geo.quat_mul(geo.quat_conj(pose_prev_row[3:7]), pose_row[3:7])
    if cfg.imu_noise_std > 0:
        rel = rel + rng.normal(0.0, cfg.imu_noise_std, 4)
    imu = geo.quat_normalize(rel)

    dist = max(float(np.linalg.norm(pose_row[:3] - scene.ap_position)), 0.05)
    rsrp = cfg.ref_rsrp_dbm - 10.0 * cfg.path_loss_exponent * np.log10(dist)
    if cfg.shadowing_std_db > 0:
        rsrp += rng.normal(0.0, cfg.shadowing_std_db)
    snr = feedback_to_snr(rsrp, cfg.noise_floor_dbm)
    return feats, imu, float(rsrp), float(snr)


def split_counts(n, ratios=(0.6, 0.2, 0.2)):
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ConfigurationError(f"split ratios must be non-negative and sum to 1, got {ratios}")
    n_val = int(np.floor(ratios[1] * n))
    n_test = int(np.floor(ratios[2] * n))
    n_train = n - n_val - n_test  # remainder goes to train
    return n_train, n_val, n_test


def make_splits(n, ratios=(0.6, 0.2, 0.2)):
    """Temporally contiguous blocks: train, then val, then test."""
    n_train, n_val, n_test = split_counts(n, ratios)
    idx = np.arange(n)
    return {
        "train": idx[:n_train].tolist(),
        "val": idx[n_train:n_train + n_val].tolist(),
        "test": idx[n_train + n_val:].tolist(),
    }


class Dataset:
    """Column-major sample storage plus the manifest metadata."""

    def __init__(self, features, imu, radio, poses, splits, cfg, seed):
        self.features = features  # (n, F) float32
        self.imu = imu            # (n, 4)
        self.radio = radio        # (n, 2): rsrp_dbm, snr_linear
        self.poses = poses        # (n, 7): px py pz qw qx qy qz
        self.splits = splits
        self.scene_cfg = cfg
        self.seed = seed

    @property
    def count(self):
        return self.features.shape[0]

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def record(self, i):
        return SampleRecord(
            features=self.features[i],
            imu=self.imu[i],
            rsrp_dbm=float(self.radio[i, 0]),
            snr_linear=float(self.radio[i, 1]),
            pose=geo.Pose.from_row(self.poses[i]),
            index=i,
        )

    def snr_db(self, idx=None):
        snr = self.radio[:, 1] if idx is None else self.radio[idx, 1]
        return 10.0 * np.log10(snr)


def generate_dataset(cfg, n, ratios=(0.6, 0.2, 0.2)):
    """Deterministic full generation: scene, trajectory, per-sample rendering."""
    scene = generate_scene(cfg)
    poses = generate_trajectory(cfg, n)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x0B5]))
    features = np.empty((n, cfg.feature_dim), dtype=np.float32)
    imu = np.empty((n, 4), dtype=np.float32)
    radio = np.empty((n, 2), dtype=np.float32)
    for i in range(n):
        prev = poses[max(i - 1, 0)]
        f, m, rsrp, snr = render_observation(prev, poses[i], scene, cfg, rng)
        features[i] = f
        imu[i] = m
        radio[i] = (rsrp, snr)
    return Dataset(
        features=features,
        imu=imu,
        radio=radio,
        poses=poses.astype(np.float32),
        splits=make_splits(n, ratios),
        cfg=cfg,
        seed=cfg.seed,
    )


_BLOBS = ("features", "imu", "radio", "poses")


def save_dataset(ds, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shapes = {}
    for name in _BLOBS:
        arr = getattr(ds, name).astype("<f4")
        arr.tofile(out / f"{name}.f32")
        shapes[name] = list(arr.shape)
    manifest = {
        "format_version": FORMAT_VERSION,
        "count": ds.count,
        "feature_dim": ds.feature_dim,
        "seed": ds.seed,
        "splits": ds.splits,
        "blobs": {name: {"file": f"{name}.f32", "shape": shapes[name]} for name in _BLOBS},
        "scene": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(ds.scene_cfg).items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return out / "manifest.json"


def load_dataset(data_dir):
    root = Path(data_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DataIOError(f"no manifest.json under {root}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DataIOError(f"corrupt manifest {manifest_path}: {e}") from e
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DataIOError(f"dataset format version {version} unsupported (expected {FORMAT_VERSION})")
    arrays = {}
    for name in _BLOBS:
        blob = manifest["blobs"][name]
        path = root / blob["file"]
        expected = int(np.prod(blob["shape"])) * 4
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise DataIOError(f"cannot read blob {path}: {e}") from e
        if len(raw) != expected:
            raise DataIOError(f"blob {path}: expected {expected} bytes, found {len(raw)}")
        arrays[name] = np.frombuffer(raw, dtype="<f4").reshape(blob["shape"])
    scene_raw = dict(manifest.get("scene", {}))
    for key in ("room", "ap_position"):
        if key in scene_raw:
            scene_raw[key] = tuple(scene_raw[key])
    cfg = SceneConfig(**scene_raw) if scene_raw else SceneConfig(seed=manifest.get("seed", 0))
    return Dataset(
        features=arrays["features"],
        imu=arrays["imu"],
        radio=arrays["radio"],
        poses=arrays["poses"],
        splits=manifest["splits"],
        cfg=cfg,
        seed=manifest.get("seed", 0),
    )


def export_csv(ds, out_path, limit=None):
    """Flat per-sample CSV for eyeballing; one row per sample."""
    n = ds.count if limit is None else min(limit, ds.count)
    with open(out_path, "w", newline="") as f:
        writer = csv.writer(f)
        header = (
            ["index", "rsrp_dbm", "snr_linear", "px", "py", "pz", "qw", "qx", "qy", "qz"]
            + [f"imu{j}" for j in range(4)]
            + [f"f{j}" for j in range(ds.feature_dim)]
        )
        writer.writerow(header)
        for i in range(n):
            row = (
                [i, ds.radio[i, 0], ds.radio[i, 1]]
                + list(ds.poses[i])
                + list(ds.imu[i])
                + list(ds.features[i])
            )
            writer.writerow(row)
    return out_path
