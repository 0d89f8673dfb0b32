"""FastAPI service wrapping the lab: data generation, training, calibration,
evaluation, sweeps, reports, and single-sample pose inference.

Endpoints are synchronous; training requests block until the run finishes
(the CLI client uses no timeout).  Errors map to a JSON detail carrying the
error ``kind`` so thin clients can recover the canonical exit code.
"""

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from .. import dataset as dsmod
from ..channel import LatencyModel, feedback_to_snr, read_rsrp_trace
from ..config import build_configs
from ..errors import ConfigurationError, SemposeError
from ..pipeline import (
    calibrate_checkpoint,
    dump_symbols,
    evaluate,
    infer_one,
    load_codec,
    read_rows_csv,
    snr_k_correlation,
    snr_report,
    sweep_fixed_k,
    train,
    write_report_csv,
    write_rows_csv,
)
from ..policy import PolicyConfig
from . import schemas as sc

_STATUS = {"configuration": 400, "io": 404, "numeric": 500, "infeasible_budget": 409}


def _policy_for(checkpoint_dir, budget_ms, repetitions, latency_model_path, gamma, symbol_dims):
    if latency_model_path:
        latency = LatencyModel.load(latency_model_path)
    else:
        latency = calibrate_checkpoint(checkpoint_dir, repetitions=repetitions)
    return PolicyConfig(
        gamma=gamma, latency_budget_ms=budget_ms, symbol_dims=symbol_dims, latency=latency
    )


def create_app():
    app = FastAPI(title="sempose", version=__version__)

    @app.exception_handler(SemposeError)
    async def sempose_error_handler(request: Request, exc: SemposeError):
        return JSONResponse(
            status_code=_STATUS.get(exc.kind, 500),
            content={"detail": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.get("/health", response_model=sc.HealthResponse)
    def health():
        return sc.HealthResponse(status="ok", name="sempose", version=__version__)

    @app.post("/datasets/generate", response_model=sc.GenerateDataResponse)
    def generate(req: sc.GenerateDataRequest):
        _, scene_cfg = build_configs(req.config)
        scene_cfg.seed = req.seed
        ds = dsmod.generate_dataset(scene_cfg, req.samples)
        manifest = dsmod.save_dataset(ds, req.out_dir)
        snr_db = ds.snr_db()
        return sc.GenerateDataResponse(
            out_dir=req.out_dir,
            manifest=str(manifest),
            count=ds.count,
            feature_dim=ds.feature_dim,
            splits={k: len(v) for k, v in ds.splits.items()},
            snr_db_min=float(snr_db.min()),
            snr_db_max=float(snr_db.max()),
        )

    @app.post("/datasets/export", response_model=sc.ExportDataResponse)
    def export(req: sc.ExportDataRequest):
        ds = dsmod.load_dataset(req.data_dir)
        n = ds.count if req.limit is None else min(req.limit, ds.count)
        dsmod.export_csv(ds, req.out_csv, limit=req.limit)
        return sc.ExportDataResponse(out_csv=req.out_csv, rows=n)

    @app.post("/train", response_model=sc.TrainResponse)
    def train_endpoint(req: sc.TrainRequest):
        train_cfg, _ = build_configs(req.config)
        result = train(train_cfg, req.data_dir, req.out_dir)
        return sc.TrainResponse(
            checkpoint_dir=result.checkpoint_dir,
            last_checkpoint_dir=result.last_checkpoint_dir,
            log_path=result.log_path,
            epochs=result.epochs,
            steps=result.steps,
            final={k: float(v) for k, v in result.final.items()},
            val_position_mae=result.val_position_mae,
        )

    @app.post("/calibrate", response_model=sc.LatencyModelResponse)
    def calibrate(req: sc.CalibrateRequest):
        latency = calibrate_checkpoint(req.checkpoint_dir, repetitions=req.repetitions)
        if req.out_path:
            latency.save(req.out_path)
        payload = latency.to_json()
        return sc.LatencyModelResponse(out_path=req.out_path, **payload)

    @app.post("/evaluate", response_model=sc.EvaluateResponse)
    def evaluate_endpoint(req: sc.EvaluateRequest):
        if req.channel_mode not in ("awgn", "noiseless"):
            raise ConfigurationError(f"channel_mode must be awgn or noiseless, got {req.channel_mode}")
        params, ccfg, meta = load_codec(req.checkpoint_dir)
        policy = _policy_for(
            req.checkpoint_dir, req.latency_budget_ms, req.calibration_repetitions,
            req.latency_model_path, float(meta.get("gamma", 100.0)), ccfg.symbol_dims,
        )
        ds = dsmod.load_dataset(req.data_dir)
        override = read_rsrp_trace(req.rsrp_trace_path) if req.rsrp_trace_path else None
        report = evaluate(
            params, ccfg, ds, req.split, policy, seed=req.seed,
            noiseless=req.channel_mode == "noiseless", rsrp_override=override,
        )
        if req.report_path:
            write_rows_csv(report.rows, req.report_path)
        return sc.EvaluateResponse(
            report_path=req.report_path,
            snr_k_correlation=snr_k_correlation(report.rows),
            **report.summary(),
        )

    @app.post("/sweep", response_model=sc.SweepResponse)
    def sweep_endpoint(req: sc.SweepRequest):
        train_cfg, _ = build_configs(req.config)
        rows, csv_path = sweep_fixed_k(
            train_cfg, req.data_dir, req.k_list, req.seeds, req.out_dir
        )
        return sc.SweepResponse(rows=[sc.SweepRow(**r) for r in rows], csv_path=csv_path)

    @app.post("/report", response_model=sc.ReportResponse)
    def report_endpoint(req: sc.ReportRequest):
        rows = read_rows_csv(req.log_path)
        table, rolling = snr_report(rows, req.bin_edges, window=req.window)
        out_path = rolling_path = None
        if req.out_path:
            out_path, rolling_path = write_report_csv(table, rolling, req.out_path)
        return sc.ReportResponse(
            bins=[sc.ReportBin(**b) for b in table],
            rolling_mean_k=rolling,
            snr_k_correlation=snr_k_correlation(rows),
            out_path=str(out_path) if out_path else None,
            rolling_path=str(rolling_path) if rolling_path else None,
        )

    @app.post("/infer", response_model=sc.InferResponse)
    def infer_endpoint(req: sc.InferRequest):
        params, ccfg, meta = load_codec(req.checkpoint_dir)
        policy = _policy_for(
            req.checkpoint_dir, req.latency_budget_ms, req.calibration_repetitions,
            req.latency_model_path, float(meta.get("gamma", 100.0)), ccfg.symbol_dims,
        )
        snr_linear = feedback_to_snr(req.rsrp_dbm, req.noise_floor_dbm)
        result = infer_one(
            params, ccfg, np.array(req.features), np.array(req.imu), snr_linear,
            policy, seed=req.seed, noiseless=req.channel_mode == "noiseless",
        )
        return sc.InferResponse(
            position=result.position.tolist(),
            quaternion=result.quaternion.tolist(),
            rotvec=result.rotvec.tolist(),
            k_star=result.k_star,
            kl_nats=result.kl_nats,
            kbar=result.kbar,
            snr_db=result.snr_db,
            enc_ms=result.enc_ms,
            dec_ms=result.dec_ms,
            airtime_ms=result.airtime_ms,
            e2e_ms=result.e2e_ms,
            measured_enc_ms=result.measured_enc_ms,
            measured_dec_ms=result.measured_dec_ms,
        )

    @app.post("/symbols/dump", response_model=sc.DumpSymbolsResponse)
    def dump_endpoint(req: sc.DumpSymbolsRequest):
        params, ccfg, meta = load_codec(req.checkpoint_dir)
        policy = _policy_for(
            req.checkpoint_dir, req.latency_budget_ms, req.calibration_repetitions,
            None, float(meta.get("gamma", 100.0)), ccfg.symbol_dims,
        )
        ds = dsmod.load_dataset(req.data_dir)
        indices = ds.splits.get(req.split, [])[: req.samples]
        if not indices:
            raise ConfigurationError(f"split '{req.split}' has no samples")
        out = dump_symbols(params, ccfg, ds, indices, policy, req.out_csv)
        return sc.DumpSymbolsResponse(out_csv=str(out), rows=len(indices))

    return app
