"""SNR-binned summaries and the rolling symbol-count series."""

import csv
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError


def snr_report(rows, bin_edges, window=50):
    """Per-SNR-bin mean angular error and mean k*, plus the rolling-k series.

    Empty bins are omitted from the table (absent, not zero).  Samples outside
    the outermost edges are not binned.
    """
    edges = [float(e) for e in bin_edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigurationError(f"bin edges must be strictly increasing, got {bin_edges}")
    snr = np.array([r["snr_db"] for r in rows])
    ks = np.array([r["k_star"] for r in rows], dtype=float)
    ang = np.array([r["ang_err_deg"] for r in rows])

    table = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        # last bin is closed on the right so covering edges partition the data
        if hi == edges[-1]:
            mask = (snr >= lo) & (snr <= hi)
        else:
            mask = (snr >= lo) & (snr < hi)
        if not mask.any():
            continue
        table.append(
            {
                "snr_lo_db": lo,
                "snr_hi_db": hi,
                "count": int(mask.sum()),
                "mean_ang_err_deg": float(ang[mask].mean()),
                "mean_k": float(ks[mask].mean()),
            }
        )

    window = max(1, min(int(window), len(ks)))
    kernel = np.ones(window) / window
    rolling = np.convolve(ks, kernel, mode="valid") if len(ks) else np.array([])
    return table, rolling.tolist()


def pearson(x, y):
    """Correlation coefficient, or None when either side is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def snr_k_correlation(rows):
    return pearson([r["snr_db"] for r in rows], [r["k_star"] for r in rows])


def write_report_csv(table, rolling, out_path):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["snr_lo_db", "snr_hi_db", "count", "mean_ang_err_deg", "mean_k"])
        for row in table:
            writer.writerow(
                [row["snr_lo_db"], row["snr_hi_db"], row["count"],
                 f"{row['mean_ang_err_deg']:.6g}", f"{row['mean_k']:.6g}"]
            )
    rolling_path = out.with_name(out.stem + "_rolling_k" + out.suffix)
    with open(rolling_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["position", "rolling_mean_k"])
        for i, v in enumerate(rolling):
            writer.writerow([i, f"{v:.6g}"])
    return out, rolling_path
