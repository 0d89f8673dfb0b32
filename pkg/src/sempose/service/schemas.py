"""Request/response models for the HTTP surface.

Paths in request bodies refer to the service host's filesystem; the CLI
passes them through untouched.  ``config`` maps are flat key=value overrides
with the same keys as the config file.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    name: str
    version: str


class ErrorDetail(BaseModel):
    kind: str
    message: str


class GenerateDataRequest(BaseModel):
    out_dir: str
    samples: int = Field(default=20000, ge=2)
    seed: int = 0
    config: Dict[str, str] = Field(default_factory=dict)


class GenerateDataResponse(BaseModel):
    out_dir: str
    manifest: str
    count: int
    feature_dim: int
    splits: Dict[str, int]
    snr_db_min: float
    snr_db_max: float


class ExportDataRequest(BaseModel):
    data_dir: str
    out_csv: str
    limit: Optional[int] = None


class ExportDataResponse(BaseModel):
    out_csv: str
    rows: int


class TrainRequest(BaseModel):
    data_dir: str
    out_dir: str
    config: Dict[str, str] = Field(default_factory=dict)


class TrainResponse(BaseModel):
    checkpoint_dir: str
    last_checkpoint_dir: str
    log_path: str
    epochs: int
    steps: int
    final: Dict[str, float]
    val_position_mae: List[float]


class CalibrateRequest(BaseModel):
    checkpoint_dir: str
    repetitions: int = 9
    out_path: Optional[str] = None


class LatencyModelResponse(BaseModel):
    airtime_ms_per_symbol: float
    dec_ms: float
    enc_ms: Dict[str, float]
    out_path: Optional[str] = None


class EvaluateRequest(BaseModel):
    checkpoint_dir: str
    data_dir: str
    report_path: Optional[str] = None
    split: str = "test"
    seed: int = 0
    channel_mode: str = "awgn"
    latency_budget_ms: float = 16.0
    calibration_repetitions: int = 9
    latency_model_path: Optional[str] = None
    rsrp_trace_path: Optional[str] = None


class EvaluateResponse(BaseModel):
    position_mae_m: float
    orientation_err_deg: float
    mean_k: float
    enc_ms: float
    dec_ms: float
    e2e_ms: float
    count: int
    report_path: Optional[str] = None
    snr_k_correlation: Optional[float] = None


class SweepRequest(BaseModel):
    data_dir: str
    out_dir: str
    k_list: List[int]
    seeds: List[int] = Field(default_factory=lambda: [0])
    config: Dict[str, str] = Field(default_factory=dict)


class SweepRow(BaseModel):
    k: int
    seed: int
    position_mae_m: float
    orientation_err_deg: float
    e2e_ms: float
    enc_ms: float
    dec_ms: float


class SweepResponse(BaseModel):
    rows: List[SweepRow]
    csv_path: str


class ReportRequest(BaseModel):
    log_path: str
    bin_edges: List[float]
    window: int = 50
    out_path: Optional[str] = None


class ReportBin(BaseModel):
    snr_lo_db: float
    snr_hi_db: float
    count: int
    mean_ang_err_deg: float
    mean_k: float


class ReportResponse(BaseModel):
    bins: List[ReportBin]
    rolling_mean_k: List[float]
    snr_k_correlation: Optional[float] = None
    out_path: Optional[str] = None
    rolling_path: Optional[str] = None


class InferRequest(BaseModel):
    checkpoint_dir: str
    features: List[float]
    imu: List[float]
    rsrp_dbm: float
    noise_floor_dbm: float = -90.0
    seed: int = 0
    channel_mode: str = "awgn"
    latency_budget_ms: float = 16.0
    calibration_repetitions: int = 9
    latency_model_path: Optional[str] = None


class InferResponse(BaseModel):
    position: List[float]
    quaternion: List[float]
    rotvec: List[float]
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


class DumpSymbolsRequest(BaseModel):
    checkpoint_dir: str
    data_dir: str
    out_csv: str
    samples: int = 16
    split: str = "test"
    latency_budget_ms: float = 16.0
    calibration_repetitions: int = 9


class DumpSymbolsResponse(BaseModel):
    out_csv: str
    rows: int
