from .infer import (
    MetricsReport,
    calibrate_checkpoint,
    dump_symbols,
    evaluate,
    infer_one,
    load_codec,
    read_rows_csv,
    write_rows_csv,
)
from .report import pearson, snr_k_correlation, snr_report, write_report_csv
from .sweep import sweep_fixed_k
from .train import TrainResult, train

__all__ = [
    "MetricsReport",
    "TrainResult",
    "calibrate_checkpoint",
    "dump_symbols",
    "evaluate",
    "infer_one",
    "load_codec",
    "pearson",
    "read_rows_csv",
    "snr_k_correlation",
    "snr_report",
    "sweep_fixed_k",
    "train",
    "write_report_csv",
    "write_rows_csv",
]
