"""Inference and test-set evaluation with the latency-constrained policy."""

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import codec as cd
from .. import geometry as geo
from .. import policy as pol
from ..channel import LatencyModel, calibrate_latency
from ..errors import ConfigurationError
from ..numerics import autodiff as ad
from ..numerics import load_params
from ..vib import kl_to_standard_normal

EVAL_CHUNK = 512

ROW_COLUMNS = (
    "sample_id", "kl_nats", "kbar", "k_star", "snr_db",
    "e2e_ms", "enc_ms", "dec_ms", "pos_err_m", "ang_err_deg",
)


@dataclass
class MetricsReport:
    position_mae_m: float
    orientation_err_deg: float
    mean_k: float
    enc_ms: float
    dec_ms: float
    e2e_ms: float
    count: int
    rows: list = field(default_factory=list, repr=False)

    def summary(self):
        return {
            "position_mae_m": self.position_mae_m,
            "orientation_err_deg": self.orientation_err_deg,
            "mean_k": self.mean_k,
            "enc_ms": self.enc_ms,
            "dec_ms": self.dec_ms,
            "e2e_ms": self.e2e_ms,
            "count": self.count,
        }


def load_codec(checkpoint_dir, dtype=np.float32):
    params, meta = load_params(checkpoint_dir, dtype=dtype)
    ccfg = cd.CodecConfig(
        feature_dim=int(meta["feature_dim"]),
        symbol_dims=tuple(meta["symbol_dims"]),
        imu_hidden=int(meta.get("imu_hidden", 8)),
        visual_widths=tuple(meta.get("visual_widths", (256, 128))),
        decoder_widths=tuple(meta.get("decoder_widths", (512, 128, 32))),
        leaky_slope=float(meta.get("leaky_slope", 0.01)),
        seed=int(meta.get("seed", 0)),
    )
    return params, ccfg, meta


def calibrate_checkpoint(checkpoint_dir, repetitions=9):
    params, ccfg, _ = load_codec(checkpoint_dir)
    return calibrate_latency(cd.InferenceCodec(params, ccfg), repetitions)


@dataclass
class InferResult:
    position: np.ndarray
    quaternion: np.ndarray
    rotvec: np.ndarray
    k_star: int
    kl_nats: float
    kbar: float
    snr_db: float
    enc_ms: float
    dec_ms: float
    airtime_ms: float
    e2e_ms: float
    measured_enc_ms: float
    measured_dec_ms: float


def infer_one(params, ccfg, features, imu, snr_linear, policy_cfg, seed=0, noiseless=False):
    """Single-sample service path: rate estimate, policy, encode, channel, decode."""
    dtype = params.dtype
    features = np.asarray(features, dtype=dtype).reshape(1, -1)
    imu = np.asarray(imu, dtype=dtype).reshape(1, -1)
    if snr_linear <= 0:
        raise ConfigurationError(f"snr_linear must be positive, got {snr_linear}")
    snr_db = float(10.0 * np.log10(snr_linear))
    snr_col = np.full((1, 1), snr_db, dtype=dtype)

    t0 = time.perf_counter()
    with ad.no_grad():
        z = cd.extract_latent(
            ad.constant(features), ad.constant(imu), ad.constant(snr_col), params, ccfg
        )
        mu, sigma = cd.variational_encode(z, ad.constant(snr_col), params, ccfg)
        kl = float(kl_to_standard_normal(cd.GaussianLatent(mu.value[0], sigma.value[0])))
        kbar = pol.estimate_kbar(kl, policy_cfg.gamma)
        k_star = pol.select_k(kbar, policy_cfg)
        s = cd.encode_symbols(z, ad.constant(snr_col), k_star, params, ccfg)
    measured_enc = (time.perf_counter() - t0) * 1e3

    if noiseless:
        s_hat = s.value
    else:
        rng = np.random.default_rng(seed)
        std = np.sqrt(0.5 / snr_linear)
        s_hat = s.value + (std * rng.standard_normal(s.value.shape)).astype(dtype)

    t1 = time.perf_counter()
    with ad.no_grad():
        pos, rv = cd.decode(ad.constant(s_hat), params, ccfg)
    measured_dec = (time.perf_counter() - t1) * 1e3

    rotvec = rv.value[0].astype(float)
    quat = geo.rotvec_to_quat(rotvec)
    lat = policy_cfg.latency
    enc = lat.enc_ms[k_star]
    air = k_star * lat.airtime_ms_per_symbol
    return InferResult(
        position=pos.value[0].astype(float),
        quaternion=quat,
        rotvec=rotvec,
        k_star=k_star,
        kl_nats=kl,
        kbar=kbar,
        snr_db=snr_db,
        enc_ms=enc,
        dec_ms=lat.dec_ms,
        airtime_ms=air,
        e2e_ms=enc + air + lat.dec_ms,
        measured_enc_ms=measured_enc,
        measured_dec_ms=measured_dec,
    )


def evaluate(params, ccfg, ds, split, policy_cfg, seed=0, noiseless=False,
             rsrp_override=None):
    """Per-sample inference over a split; aggregates are means of the rows."""
    idx = np.asarray(ds.splits[split] if isinstance(split, str) else split, dtype=int)
    if idx.size == 0:
        raise ConfigurationError(f"evaluation split '{split}' is empty")
    dtype = params.dtype
    lat = policy_cfg.latency
    rows = []
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7A1]))
    for lo in range(0, len(idx), EVAL_CHUNK):
        chunk = idx[lo:lo + EVAL_CHUNK]
        feats = ds.features[chunk].astype(dtype)
        imu = ds.imu[chunk].astype(dtype)
        rsrp = ds.radio[chunk, 0].astype(np.float64)
        snr_linear = ds.radio[chunk, 1].astype(np.float64)
        if rsrp_override is not None:
            from ..channel import feedback_to_snr
            rsrp = np.array([rsrp_override.get(int(i), r) for i, r in zip(chunk, rsrp)])
            snr_linear = np.array(
                [feedback_to_snr(r, ds.scene_cfg.noise_floor_dbm) for r in rsrp]
            )
        snr_db = 10.0 * np.log10(snr_linear)
        snr_col = snr_db[:, None].astype(dtype)
        with ad.no_grad():
            z = cd.extract_latent(
                ad.constant(feats), ad.constant(imu), ad.constant(snr_col), params, ccfg
            )
            mu, sigma = cd.variational_encode(z, ad.constant(snr_col), params, ccfg)
        kl_vals = 0.5 * (
            mu.value.astype(np.float64) ** 2
            + sigma.value.astype(np.float64) ** 2
            - 1.0
            - 2.0 * np.log(sigma.value.astype(np.float64))
        ).sum(axis=1)
        kbars = policy_cfg.gamma * kl_vals
        k_stars = np.array([pol.select_k(kb, policy_cfg) for kb in kbars], dtype=int)

        pos_hat = np.empty((len(chunk), 3))
        ang_err = np.empty(len(chunk))
        for k in sorted(set(k_stars.tolist())):
            sel = np.flatnonzero(k_stars == k)
            with ad.no_grad():
                s = cd.encode_symbols(
                    ad.take_rows(z, sel), ad.constant(snr_col[sel]), k, params, ccfg
                )
                if noiseless:
                    s_hat = s.value
                else:
                    std = np.sqrt(0.5 / snr_linear[sel])[:, None]
                    s_hat = s.value + (std * rng.standard_normal(s.value.shape)).astype(dtype)
                pos, rv = cd.decode(ad.constant(s_hat), params, ccfg)
            pos_hat[sel] = pos.value
            for j, row in zip(sel, rv.value):
                q_hat = geo.rotvec_to_quat(row.astype(float))
                ang_err[j] = geo.angular_distance_deg(ds.poses[chunk[j], 3:7], q_hat)
        pos_err = np.linalg.norm(pos_hat - ds.poses[chunk, :3], axis=1)
        for j, i in enumerate(chunk):
            k = int(k_stars[j])
            enc = lat.enc_ms[k]
            air = k * lat.airtime_ms_per_symbol
            rows.append(
                {
                    "sample_id": int(i),
                    "kl_nats": float(kl_vals[j]),
                    "kbar": float(kbars[j]),
                    "k_star": k,
                    "snr_db": float(snr_db[j]),
                    "e2e_ms": enc + air + lat.dec_ms,
                    "enc_ms": enc,
                    "dec_ms": lat.dec_ms,
                    "pos_err_m": float(pos_err[j]),
                    "ang_err_deg": float(ang_err[j]),
                }
            )
    return MetricsReport(
        position_mae_m=float(np.mean([r["pos_err_m"] for r in rows])),
        orientation_err_deg=float(np.mean([r["ang_err_deg"] for r in rows])),
        mean_k=float(np.mean([r["k_star"] for r in rows])),
        enc_ms=float(np.mean([r["enc_ms"] for r in rows])),
        dec_ms=float(np.mean([r["dec_ms"] for r in rows])),
        e2e_ms=float(np.mean([r["e2e_ms"] for r in rows])),
        count=len(rows),
        rows=rows,
    )


def write_rows_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=ROW_COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r[k] for k in ROW_COLUMNS})
    return path


def read_rows_csv(path):
    rows = []
    with open(path, newline="") as f:
        for r in csv.DictReader(f):
            rows.append(
                {
                    "sample_id": int(r["sample_id"]),
                    "kl_nats": float(r["kl_nats"]),
                    "kbar": float(r["kbar"]),
                    "k_star": int(r["k_star"]),
                    "snr_db": float(r["snr_db"]),
                    "e2e_ms": float(r["e2e_ms"]),
                    "enc_ms": float(r["enc_ms"]),
                    "dec_ms": float(r["dec_ms"]),
                    "pos_err_m": float(r["pos_err_m"]),
                    "ang_err_deg": float(r["ang_err_deg"]),
                }
            )
    return rows


def dump_symbols(params, ccfg, ds, indices, policy_cfg, out_path):
    """CSV rows (sample_id, k, 2k interleaved reals) for inspection."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    dtype = params.dtype
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        for i in indices:
            rec = ds.record(int(i))
            snr_db = 10.0 * np.log10(rec.snr_linear)
            snr_col = np.full((1, 1), snr_db, dtype=dtype)
            with ad.no_grad():
                z = cd.extract_latent(
                    ad.constant(rec.features[None, :].astype(dtype)),
                    ad.constant(rec.imu[None, :].astype(dtype)),
                    ad.constant(snr_col),
                    params,
                    ccfg,
                )
                mu, sigma = cd.variational_encode(z, ad.constant(snr_col), params, ccfg)
                kl = float(kl_to_standard_normal(cd.GaussianLatent(mu.value[0], sigma.value[0])))
                k = pol.select_k(pol.estimate_kbar(kl, policy_cfg.gamma), policy_cfg)
                s = cd.encode_symbols(z, ad.constant(snr_col), k, params, ccfg)
            writer.writerow([int(i), k] + [f"{v:.7g}" for v in s.value[0]])
    return out
