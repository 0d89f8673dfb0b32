"""Joint training of trunk, symbol heads, variational head, and decoder.

Per minibatch: the variational head's per-sample KL picks each sample's
symbol count (scaled by gamma, floored at min K, no latency term during
training), the channel path runs the selected heads through AWGN at each
sample's own SNR, and one Adam step updates everything reachable.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import codec as cd
from .. import policy as pol
from ..dataset import load_dataset
from ..errors import ConfigurationError, NumericError
from ..numerics import AdamState, adam_step, backprop, save_params
from ..numerics import autodiff as ad
from ..vib import Batch, kl_rows_graph, total_loss

LOG_COLUMNS = ("step", "app", "vib_recon", "vib_kl", "total", "mean_k")
VAL_CAP = 2048  # model selection uses at most this many validation samples


@dataclass
class TrainResult:
    checkpoint_dir: str     # best-by-validation checkpoint
    last_checkpoint_dir: str
    log_path: str
    epochs: int
    steps: int
    final: dict
    val_position_mae: list


def _dtype(cfg):
    return np.float64 if cfg.precision == "float64" else np.float32


def make_batch(ds, idx, dtype):
    snr_linear = ds.radio[idx, 1].astype(np.float64)
    return Batch(
        features=ds.features[idx].astype(dtype),
        imu=ds.imu[idx].astype(dtype),
        snr_db=(10.0 * np.log10(snr_linear))[:, None].astype(dtype),
        snr_linear=snr_linear,
        positions=ds.poses[idx, :3].astype(np.float64),
        quats=ds.poses[idx, 3:7].astype(np.float64),
    )


def forward_rate(batch, params, cfg):
    """Trunk + variational head; returns (z, mu, sigma, per-sample KL node)."""
    z = cd.extract_latent(
        ad.constant(batch.features), ad.constant(batch.imu), ad.constant(batch.snr_db),
        params, cfg,
    )
    mu, sigma = cd.variational_encode(z, ad.constant(batch.snr_db), params, cfg)
    return z, mu, sigma, kl_rows_graph(mu, sigma)


def choose_train_ks(kl_values, train_cfg):
    if train_cfg.fixed_k:
        return np.full(kl_values.shape, train_cfg.fixed_k, dtype=int)
    kbars = train_cfg.gamma * kl_values
    return np.array(
        [pol.quantize_train(kb, train_cfg.symbol_dims) for kb in kbars], dtype=int
    )


def _validation_mae(ds, val_idx, params, ccfg, train_cfg, epoch):
    """Position MAE on (a cap of) the validation split, channel included."""
    idx = np.asarray(val_idx[:VAL_CAP])
    dtype = _dtype(train_cfg)
    rng = np.random.default_rng(np.random.SeedSequence([train_cfg.seed, 0x7A1, epoch]))
    errs = []
    with ad.no_grad():
        for lo in range(0, len(idx), 512):
            batch = make_batch(ds, idx[lo:lo + 512], dtype)
            z, mu, sigma, kl_rows = forward_rate(batch, params, ccfg)
            ks = choose_train_ks(kl_rows.value.astype(np.float64), train_cfg)
            for k in sorted(set(ks.tolist())):
                rows = np.flatnonzero(ks == k)
                s = cd.encode_symbols(
                    ad.take_rows(z, rows), ad.constant(batch.snr_db[rows]), k, params, ccfg
                )
                if train_cfg.channel_mode == "awgn":
                    std = np.sqrt(0.5 / batch.snr_linear[rows])[:, None]
                    s_hat = ad.add_const(s, (std * rng.standard_normal(s.value.shape)).astype(dtype))
                else:
                    s_hat = s
                pos_hat, _ = cd.decode(s_hat, params, ccfg)
                errs.extend(
                    np.linalg.norm(pos_hat.value - batch.positions[rows], axis=1).tolist()
                )
    return float(np.mean(errs))


def train(train_cfg, data_dir, out_dir):
    """Run the full loop; writes per-epoch checkpoints, best/last, and the log CSV."""
    ds = load_dataset(data_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_idx = np.asarray(ds.splits["train"], dtype=int)
    val_idx = np.asarray(ds.splits["val"], dtype=int)
    if train_idx.size == 0:
        raise ConfigurationError("training split is empty")

    dtype = _dtype(train_cfg)
    ccfg = cd.CodecConfig(
        feature_dim=ds.feature_dim,
        symbol_dims=(train_cfg.fixed_k,) if train_cfg.fixed_k else train_cfg.symbol_dims,
        seed=train_cfg.seed,
    )
    params = cd.build_params(ccfg, dtype=dtype)
    adam = AdamState(params, lr=train_cfg.learning_rate)
    weights = train_cfg.weights()

    meta = {
        "feature_dim": ccfg.feature_dim,
        "symbol_dims": list(ccfg.symbol_dims),
        "imu_hidden": ccfg.imu_hidden,
        "visual_widths": list(ccfg.visual_widths),
        "decoder_widths": list(ccfg.decoder_widths),
        "leaky_slope": ccfg.leaky_slope,
        "seed": train_cfg.seed,
        "alpha": weights.alpha,
        "beta": weights.beta,
        "eta": weights.eta,
        "gamma": weights.gamma,
    }
    best_dir = out / "checkpoint_best"
    last_dir = out / "checkpoint_last"
    save_params(params, last_dir, meta=meta)

    log_path = out / "train_log.csv"
    perm_rng = np.random.default_rng(np.random.SeedSequence([train_cfg.seed, 0x5E9]))
    best_mae = np.inf
    val_history = []
    step = 0
    final = None

    with open(log_path, "w", newline="") as logf:
        writer = csv.writer(logf)
        writer.writerow(LOG_COLUMNS)
        for epoch in range(train_cfg.epochs):
            order = perm_rng.permutation(train_idx)
            for lo in range(0, len(order), train_cfg.batch_size):
                idx = order[lo:lo + train_cfg.batch_size]
                batch = make_batch(ds, idx, dtype)
                z, mu, sigma, kl_rows = forward_rate(batch, params, ccfg)
                ks = choose_train_ks(kl_rows.value.astype(np.float64), train_cfg)
                rng_noise = np.random.default_rng(
                    np.random.SeedSequence([train_cfg.seed, 0xC4A, epoch, step])
                )
                rng_eps = np.random.default_rng(
                    np.random.SeedSequence([train_cfg.seed, 0xE95, epoch, step])
                )
                loss, breakdown = total_loss(
                    z, mu, sigma, batch, ks, params, ccfg, weights,
                    rng_noise, rng_eps, noiseless=train_cfg.channel_mode == "noiseless",
                )
                if not np.isfinite(loss.value):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch} step {step}; "
                        f"last good checkpoint: {last_dir}"
                    )
                grads = backprop(loss, params)
                adam_step(params, grads, adam)
                if step % train_cfg.log_every == 0:
                    writer.writerow(
                        [
                            step,
                            f"{breakdown.app_distortion:.9g}",
                            f"{breakdown.vib_reconstruction:.9g}",
                            f"{breakdown.vib_kl:.9g}",
                            f"{breakdown.total:.9g}",
                            f"{float(np.mean(ks)):.9g}",
                        ]
                    )
                final = breakdown
                step += 1
            save_params(params, last_dir, meta=meta)
            if val_idx.size:
                mae = _validation_mae(ds, val_idx, params, ccfg, train_cfg, epoch)
                val_history.append(mae)
                if mae < best_mae:
                    best_mae = mae
                    save_params(params, best_dir, meta=meta)
    if not best_dir.exists():
        save_params(params, best_dir, meta=meta)
    return TrainResult(
        checkpoint_dir=str(best_dir),
        last_checkpoint_dir=str(last_dir),
        log_path=str(log_path),
        epochs=train_cfg.epochs,
        steps=step,
        final=vars(final) if final else {},
        val_position_mae=val_history,
    )
