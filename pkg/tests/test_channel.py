"""Power scaling, AWGN moments, feedback mapping, airtime, latency calibration."""

import time

import numpy as np
import pytest

from sempose import channel as ch
from sempose.errors import ConfigurationError, FramingError, InfeasibleBudgetError


def test_power_normalize_scales_large_pair():
    block = ch.power_normalize(np.array([3.0, 4.0]))
    assert np.allclose(block.data, [0.6, 0.8])
    assert block.k == 1


def test_power_normalize_keeps_small_pair():
    block = ch.power_normalize(np.array([0.3, 0.4]))
    assert np.array_equal(block.data, [0.3, 0.4])


def test_power_normalize_zero_block():
    block = ch.power_normalize(np.zeros(8))
    assert np.all(block.data == 0.0)


def test_power_normalize_odd_length_is_framing_error():
    with pytest.raises(FramingError):
        ch.power_normalize(np.ones(5))


def test_power_constraint_over_random_blocks():
    rng = np.random.default_rng(0)
    raw = rng.normal(0, 3, size=(100_000, 8))
    mags = []
    for row in raw[:2000]:
        mags.append(ch.power_normalize(row).magnitudes().max())
    assert max(mags) <= 1.0 + 1e-9
    # vectorized check over the full draw via the same pairwise rule
    pairs = raw.reshape(-1, 4, 2)
    r = np.sqrt((pairs**2).sum(axis=2))
    scaled = r * np.where(r > 1, 1 / r, 1.0)
    assert scaled.max() <= 1.0 + 1e-9


def test_awgn_noiseless_flag_exact():
    block = ch.power_normalize(np.array([0.5, -0.2, 0.1, 0.9]))
    state = ch.ChannelState(rsrp_dbm=-80.0, snr_linear=5.0)
    out = ch.awgn_transmit(block, state, seed=3, noiseless=True)
    assert np.array_equal(out.data, block.data)


def test_awgn_moment_at_unit_snr():
    # per complex symbol noise power = 1/SNR within 1% over 1e6 draws
    k = 1_000_000
    block = ch.SymbolBlock(k=k, data=np.zeros(2 * k))
    state = ch.ChannelState(rsrp_dbm=-90.0, snr_linear=1.0)
    out = ch.awgn_transmit(block, state, seed=11)
    power = (out.data.reshape(k, 2) ** 2).sum(axis=1).mean()
    assert abs(power - 1.0) < 0.01


def test_awgn_deterministic_per_seed():
    block = ch.power_normalize(np.linspace(-1, 1, 16))
    state = ch.ChannelState(rsrp_dbm=-85.0, snr_linear=2.0)
    a = ch.awgn_transmit(block, state, seed=42)
    b = ch.awgn_transmit(block, state, seed=42)
    c = ch.awgn_transmit(block, state, seed=43)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_awgn_noise_is_zero_mean():
    k = 500_000
    block = ch.SymbolBlock(k=k, data=np.zeros(2 * k))
    out = ch.awgn_transmit(block, ch.ChannelState(-90, 4.0), seed=5)
    assert abs(out.data.mean()) < 3 * ch.noise_std_per_component(4.0) / np.sqrt(2 * k)


def test_channel_state_rejects_nonpositive_snr():
    with pytest.raises(ConfigurationError):
        ch.ChannelState(rsrp_dbm=-90, snr_linear=0.0)


def test_feedback_to_snr_reference_points():
    assert ch.feedback_to_snr(-90.0, -90.0) == pytest.approx(1.0)
    assert ch.feedback_to_snr(-80.0, -90.0) == pytest.approx(10.0)
    assert ch.feedback_to_snr(-70.0, -90.0) == pytest.approx(100.0)


def test_feedback_to_snr_strictly_increasing():
    rsrps = np.linspace(-120, -20, 101)
    snrs = [ch.feedback_to_snr(r, -90.0) for r in rsrps]
    assert all(b > a for a, b in zip(snrs, snrs[1:]))


def test_transmission_time_values():
    assert ch.transmission_time_ms(0) == 0.0
    assert ch.transmission_time_ms(512) == 0.078848
    assert ch.transmission_time_ms(26) == pytest.approx(0.004004, abs=1e-12)


def test_e2e_latency_sum_and_monotone():
    model = ch.LatencyModel(enc_ms={64: 1.7, 128: 1.8, 512: 2.5}, dec_ms=0.44)
    assert model.e2e_ms(64) == pytest.approx(1.7 + 64 * 1.54e-4 + 0.44, abs=1e-12)
    assert model.e2e_ms(64) == pytest.approx(2.149856, abs=1e-9)
    ks = sorted(model.enc_ms)
    vals = [model.e2e_ms(k) for k in ks]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_e2e_latency_unknown_k():
    model = ch.LatencyModel(enc_ms={64: 1.0}, dec_ms=0.5)
    with pytest.raises(ConfigurationError):
        model.e2e_ms(96)


def test_latency_model_json_roundtrip(tmp_path):
    model = ch.LatencyModel(enc_ms={64: 1.0, 128: 1.25}, dec_ms=0.5)
    path = tmp_path / "latency.json"
    model.save(path)
    again = ch.LatencyModel.load(path)
    assert again.enc_ms == model.enc_ms
    assert again.dec_ms == model.dec_ms
    assert again.airtime_ms_per_symbol == model.airtime_ms_per_symbol


def test_isotonic_pool_adjacent_violators_by_hand():
    assert ch.isotonic_non_decreasing([2.0, 1.9]) == [1.95, 1.95]
    assert ch.isotonic_non_decreasing([1.0, 2.0, 3.0]) == [1.0, 2.0, 3.0]
    out = ch.isotonic_non_decreasing([3.0, 1.0, 2.0])
    assert all(b >= a for a, b in zip(out, out[1:]))
    assert sum(out) == pytest.approx(6.0)


class _BusyStub:
    """Timing stub: encode busy-waits a per-k duration, decode a fixed one."""

    def __init__(self, per_k_ms):
        self.per_k_ms = per_k_ms
        self.symbol_dims = tuple(sorted(per_k_ms))

    def _busy(self, ms):
        t0 = time.perf_counter()
        while (time.perf_counter() - t0) * 1e3 < ms:
            pass

    def time_encode(self, k):
        self._busy(self.per_k_ms[k])

    def time_decode(self):
        self._busy(0.2)


def test_calibrate_constant_time_stub():
    stub = _BusyStub({64: 1.0, 128: 1.0, 256: 1.0})
    model = ch.calibrate_latency(stub, repetitions=5)
    vals = [model.enc_ms[k] for k in sorted(model.enc_ms)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert max(vals) - min(vals) < 0.5  # constant within measurement noise
    assert all(abs(v - 1.0) < 0.6 for v in vals)


def test_calibrate_proportional_stub():
    stub = _BusyStub({64: 0.5, 128: 1.0, 256: 2.0})
    model = ch.calibrate_latency(stub, repetitions=5)
    assert model.enc_ms[256] > model.enc_ms[64]
    assert model.enc_ms[256] / model.enc_ms[64] == pytest.approx(4.0, rel=0.5)


def test_calibrate_rejects_too_few_repetitions():
    with pytest.raises(ConfigurationError):
        ch.calibrate_latency(_BusyStub({64: 0.1}), repetitions=2)


def test_read_rsrp_trace(tmp_path):
    p = tmp_path / "trace.csv"
    p.write_text("sample_index,rsrp_dbm\n0,-70.5\n3,-80.25\n")
    trace = ch.read_rsrp_trace(p)
    assert trace == {0: -70.5, 3: -80.25}
