"""Complex-baseband link: unit-power scaling, AWGN with measured SNR,
RSRP feedback mapping, and the end-to-end latency model.

Symbols are k complex values stored as 2k interleaved reals
(real0, imag0, real1, imag1, ...).
"""

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataIOError, FramingError

AIRTIME_MS_PER_SYMBOL = 1.54e-4  # one data subcarrier of a 20 MHz link, see README
DEFAULT_NOISE_FLOOR_DBM = -90.0


@dataclass
class SymbolBlock:
    k: int
    data: np.ndarray  # 2k interleaved reals

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != (2 * self.k,):
            raise FramingError(
                f"symbol block: expected {2 * self.k} interleaved reals, got shape {self.data.shape}"
            )

    def magnitudes(self):
        pairs = self.data.reshape(self.k, 2)
        return np.sqrt((pairs * pairs).sum(axis=1))


@dataclass
class ChannelState:
    rsrp_dbm: float
    snr_linear: float

    def __post_init__(self):
        if not (self.snr_linear > 0):
            raise ConfigurationError(f"snr_linear must be positive, got {self.snr_linear}")

    @property
    def snr_db(self):
        return 10.0 * np.log10(self.snr_linear)

    @classmethod
    def from_rsrp(cls, rsrp_dbm, noise_floor_dbm=DEFAULT_NOISE_FLOOR_DBM):
        return cls(rsrp_dbm=rsrp_dbm, snr_linear=feedback_to_snr(rsrp_dbm, noise_floor_dbm))


def feedback_to_snr(rsrp_dbm, noise_floor_dbm=DEFAULT_NOISE_FLOOR_DBM):
    """Linear SNR implied by an RSRP reading over a fixed noise floor."""
    return float(10.0 ** ((rsrp_dbm - noise_floor_dbm) / 10.0))


def power_normalize(raw):
    """Scale each complex symbol by min{1, 1/|s_j|}; in-disk symbols untouched."""
    raw = np.asarray(raw)
    if raw.ndim != 1 or raw.size % 2:
        raise FramingError(f"power_normalize expects an even-length flat vector, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise FramingError("power_normalize: non-finite symbol values")
    k = raw.size // 2
    pairs = raw.reshape(k, 2)
    mags = np.sqrt((pairs * pairs).sum(axis=1))
    scale = np.where(mags > 1.0, 1.0 / np.maximum(mags, 1e-30), 1.0)
    return SymbolBlock(k=k, data=(pairs * scale[:, None]).reshape(-1))


def noise_std_per_component(snr_linear):
    """Each real component gets variance sigma_n^2 / 2 = 1 / (2 snr)."""
    return float(np.sqrt(0.5 / snr_linear))


def sample_noise(n_components, snr_linear, rng, dtype=np.float64):
    return rng.normal(0.0, noise_std_per_component(snr_linear), size=n_components).astype(dtype)


def awgn_transmit(block, state, seed, noiseless=False):
    """s_hat = s + n with circularly-symmetric complex Gaussian n, var 1/SNR per symbol."""
    if noiseless:
        return SymbolBlock(k=block.k, data=block.data.copy())
    rng = np.random.default_rng(seed)
    noise = sample_noise(2 * block.k, state.snr_linear, rng, dtype=block.data.dtype)
    return SymbolBlock(k=block.k, data=block.data + noise)


def transmission_time_ms(k, airtime_ms_per_symbol=AIRTIME_MS_PER_SYMBOL):
    if k < 0:
        raise ConfigurationError(f"symbol count must be non-negative, got {k}")
    return k * airtime_ms_per_symbol


@dataclass
class LatencyModel:
    enc_ms: dict  # k -> encoder inference ms, non-decreasing in k
    dec_ms: float
    airtime_ms_per_symbol: float = AIRTIME_MS_PER_SYMBOL

    def __post_init__(self):
        self.enc_ms = {int(k): float(v) for k, v in self.enc_ms.items()}
        ks = sorted(self.enc_ms)
        vals = [self.enc_ms[k] for k in ks]
        if any(v <= 0 for v in vals) or self.dec_ms <= 0:
            raise ConfigurationError("latency model entries must be positive")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("encoder latency table must be non-decreasing in k")

    def e2e_ms(self, k):
        if k not in self.enc_ms:
            raise ConfigurationError(f"no latency entry for k={k}")
        return self.enc_ms[k] + transmission_time_ms(k, self.airtime_ms_per_symbol) + self.dec_ms

    def to_json(self):
        return {
            "airtime_ms_per_symbol": self.airtime_ms_per_symbol,
            "dec_ms": self.dec_ms,
            "enc_ms": {str(k): v for k, v in sorted(self.enc_ms.items())},
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def from_json(cls, obj):
        return cls(
            enc_ms={int(k): float(v) for k, v in obj["enc_ms"].items()},
            dec_ms=float(obj["dec_ms"]),
            airtime_ms_per_symbol=float(obj.get("airtime_ms_per_symbol", AIRTIME_MS_PER_SYMBOL)),
        )

    @classmethod
    def load(cls, path):
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise DataIOError(f"cannot read latency model {path}: {e}") from e
        return cls.from_json(obj)


def e2e_latency_ms(k, model):
    return model.e2e_ms(k)


def isotonic_non_decreasing(values):
    """Pool-adjacent-violators fit, L2, non-decreasing."""
    levels = []  # (mean, count)
    for v in values:
        levels.append((float(v), 1))
        while len(levels) > 1 and levels[-2][0] > levels[-1][0]:
            m2, c2 = levels.pop()
            m1, c1 = levels.pop()
            levels.append(((m1 * c1 + m2 * c2) / (c1 + c2), c1 + c2))
    out = []
    for mean, count in levels:
        out.extend([mean] * count)
    return out


def calibrate_latency(codec, repetitions, dec_repetitions=None):
    """Median wall-clock per k, made non-decreasing by isotonic regression.

    ``codec`` must expose ``symbol_dims``, ``time_encode(k)`` and
    ``time_decode()`` hooks that each run one inference.  Single-threaded on
    purpose: interleaved timing runs would pollute each other.
    """
    if repetitions < 3:
        raise ConfigurationError(f"calibration needs at least 3 repetitions, got {repetitions}")
    dec_repetitions = dec_repetitions or repetitions
    ks = sorted(codec.symbol_dims)
    medians = []
    for k in ks:
        codec.time_encode(k)  # warm-up, not measured
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            codec.time_encode(k)
            samples.append((time.perf_counter() - t0) * 1e3)
        medians.append(float(np.median(samples)))
    monotone = isotonic_non_decreasing(medians)
    enc_ms = {k: max(v, 1e-9) for k, v in zip(ks, monotone)}

    codec.time_decode()
    dec_samples = []
    for _ in range(dec_repetitions):
        t0 = time.perf_counter()
        codec.time_decode()
        dec_samples.append((time.perf_counter() - t0) * 1e3)
    dec_ms = max(float(np.median(dec_samples)), 1e-9)
    return LatencyModel(enc_ms=enc_ms, dec_ms=dec_ms)


def read_rsrp_trace(path):
    """CSV of (sample_index, rsrp_dbm) rows; header optional."""
    rows = {}
    try:
        with open(path, newline="") as f:
            for row in csv.reader(f):
                if not row or not row[0].strip():
                    continue
                try:
                    idx = int(row[0])
                except ValueError:
                    continue  # header line
                rows[idx] = float(row[1])
    except OSError as e:
        raise DataIOError(f"cannot read RSRP trace {path}: {e}") from e
    if not rows:
        raise DataIOError(f"RSRP trace {path} contains no samples")
    return rows
