"""Fixed-k rate-distortion sweeps: one single-head training run per (k, seed)."""

import csv
from dataclasses import replace
from pathlib import Path

from ..channel import calibrate_latency
from ..codec import InferenceCodec
from ..dataset import load_dataset
from ..policy import PolicyConfig
from .infer import evaluate, load_codec
from .train import train


def sweep_fixed_k(base_cfg, data_dir, k_list, seeds, out_dir, latency_budget_ms=None):
    """Train and evaluate each fixed k at each seed; returns one row per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    budget = latency_budget_ms or base_cfg.latency_budget_ms
    rows = []
    for k in k_list:
        for seed in seeds:
            cfg = replace(base_cfg, fixed_k=int(k), symbol_dims=(int(k),), seed=int(seed))
            run_dir = out / f"k{k}_seed{seed}"
            result = train(cfg, data_dir, run_dir)
            params, ccfg, _ = load_codec(result.checkpoint_dir)
            latency = calibrate_latency(InferenceCodec(params, ccfg), repetitions=5)
            policy = PolicyConfig(
                gamma=cfg.gamma,
                latency_budget_ms=budget,
                symbol_dims=ccfg.symbol_dims,
                latency=latency,
            )
            ds = load_dataset(data_dir)
            report = evaluate(params, ccfg, ds, "test", policy, seed=seed)
            rows.append(
                {
                    "k": int(k),
                    "seed": int(seed),
                    "position_mae_m": report.position_mae_m,
                    "orientation_err_deg": report.orientation_err_deg,
                    "e2e_ms": report.e2e_ms,
                    "enc_ms": report.enc_ms,
                    "dec_ms": report.dec_ms,
                }
            )
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.DictWriter(
            f,
            fieldnames=[
                "k", "seed", "position_mae_m", "orientation_err_deg",
                "e2e_ms", "enc_ms", "dec_ms",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)
    return rows, str(csv_path)
