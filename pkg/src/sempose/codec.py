"""The learned codec: shared latent trunk, multi-head symbol encoder,
variational head, and the zero-padding pose decoder.

The trunk concatenates a fully connected visual-feature branch, a two-layer
IMU branch, and the scalar SNR feedback (dB), then runs two fully connected
layers.  Each symbol head maps the latent (plus the SNR scalar) to 2k reals
through Tanh and unit-disk scaling; only the selected head is evaluated.
The decoder zero-pads received symbols to the widest head and emits
3 position + 3 rotation-vector outputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FramingError, PolicyError
from .numerics import LayerSpec, ParamSet, mlp_forward
from .numerics import autodiff as ad

DEFAULT_SYMBOL_DIMS = (64, 128, 192, 256, 320, 384, 448, 512)


def validate_symbol_dims(dims):
    dims = tuple(int(k) for k in dims)
    if not dims or any(k <= 0 for k in dims):
        raise ConfigurationError(f"symbol dims must be positive integers, got {dims}")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ConfigurationError(f"symbol dims must be strictly increasing, got {dims}")
    return dims


@dataclass
class CodecConfig:
    feature_dim: int = 64
    imu_dim: int = 4
    symbol_dims: tuple = DEFAULT_SYMBOL_DIMS
    imu_hidden: int = 8
    visual_widths: tuple = (256, 128)
    decoder_widths: tuple = (512, 128, 32)
    leaky_slope: float = 0.01
    sigma_floor: float = 1e-6
    sigma_ceil: float = 1e6
    # Glorot init of the variational head is scaled down so the rate term
    # starts at O(10) nats instead of O(10^4); full-scale init swamps early
    # training and ruins finite-difference conditioning.
    variational_init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        self.symbol_dims = validate_symbol_dims(self.symbol_dims)
        if self.feature_dim <= 0:
            raise ConfigurationError(f"feature_dim must be positive, got {self.feature_dim}")

    @property
    def k_max(self):
        return self.symbol_dims[-1]

    @property
    def latent_dim(self):
        return 2 * self.k_max

    def head_name(self, k):
        return f"fs.head{k}"

    def trunk_spec(self):
        f, km = self.feature_dim, self.k_max
        vis_widths = (f,) + tuple(self.visual_widths)
        visual = [
            LayerSpec(f"visual.fc{i}", vis_widths[i], vis_widths[i + 1])
            for i in range(len(vis_widths) - 1)
        ]
        return {
            "visual": visual,
            "imu": [
                LayerSpec("imu.fc0", self.imu_dim, self.imu_hidden),
                LayerSpec("imu.fc1", self.imu_hidden, self.imu_dim),
            ],
            "fz": [
                LayerSpec("fz.fc0", vis_widths[-1] + self.imu_dim + 1, 4 * km),
                LayerSpec("fz.fc1", 4 * km, 2 * km),
            ],
        }

    def decoder_spec(self):
        widths = (2 * self.k_max,) + tuple(self.decoder_widths)
        layers = [
            LayerSpec(f"fd.fc{i}", widths[i], widths[i + 1])
            for i in range(len(widths) - 1)
        ]
        layers.append(LayerSpec(f"fd.fc{len(widths) - 1}", widths[-1], 6, activation="identity"))
        return layers


def build_params(cfg, dtype=np.float32, seed=None):
    """Fresh parameter set for the whole codec, seeded Glorot-uniform."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    params = ParamSet(dtype=dtype)
    spec = cfg.trunk_spec()
    for group in ("visual", "imu", "fz"):
        for layer in spec[group]:
            params.add_initialized(layer.name, layer.fan_in, layer.fan_out, rng)
    fan_in, fan_out = cfg.latent_dim + 1, 4 * cfg.k_max
    bound = cfg.variational_init_scale * np.sqrt(6.0 / (fan_in + fan_out))
    params.add("fvar.fc", rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out))
    for k in cfg.symbol_dims:
        params.add_initialized(cfg.head_name(k), cfg.latent_dim + 1, 2 * k, rng)
    for layer in cfg.decoder_spec():
        params.add_initialized(layer.name, layer.fan_in, layer.fan_out, rng)
    return params


def extract_latent(features, imu, snr_db, params, cfg):
    """Trunk forward pass; inputs are (B, F), (B, 4) Vars and a (B, 1) snr-dB Var."""
    spec = cfg.trunk_spec()
    if features.value.shape[1] != cfg.feature_dim:
        raise ConfigurationError(
            f"feature width {features.value.shape[1]} does not match config F={cfg.feature_dim}"
        )
    if imu.value.shape[1] != cfg.imu_dim:
        raise ConfigurationError(
            f"imu width {imu.value.shape[1]} does not match config imu_dim={cfg.imu_dim}"
        )
    v = mlp_forward(features, params, spec["visual"], slope=cfg.leaky_slope)
    m = mlp_forward(imu, params, spec["imu"], slope=cfg.leaky_slope)
    joint = ad.concat_cols([v, m, snr_db], name="fz.concat")
    return mlp_forward(joint, params, spec["fz"], slope=cfg.leaky_slope)


def encode_symbols(z, snr_db, k, params, cfg):
    """Selected head only: affine -> Tanh -> unit-disk scaling; (B, 2k) Var."""
    if k not in cfg.symbol_dims:
        raise PolicyError(f"k={k} is not an admissible symbol dimension {cfg.symbol_dims}")
    w, b = params[cfg.head_name(k)]
    h = ad.affine(ad.concat_cols([z, snr_db], name="fs.concat"), w, b, name=cfg.head_name(k))
    return ad.power_normalize_pairs(ad.tanh(h, name="fs.tanh"), name="fs.power")


def variational_encode(z, snr_db, params, cfg):
    """Gaussian over the corrupted-symbol space: (mu, sigma) Vars, each (B, 2k_max)."""
    w, b = params["fvar.fc"]
    raw = ad.affine(ad.concat_cols([z, snr_db], name="fvar.concat"), w, b, name="fvar.fc")
    width = cfg.latent_dim
    mu = ad.slice_cols(raw, 0, width, name="fvar.mu")
    sigma = ad.clip(
        ad.exp(ad.slice_cols(raw, width, 2 * width, name="fvar.logsigma"), name="fvar.exp"),
        cfg.sigma_floor,
        cfg.sigma_ceil,
        name="fvar.sigma",
    )
    return mu, sigma


@dataclass
class GaussianLatent:
    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.stddev = np.asarray(self.stddev, dtype=float)
        if self.mean.shape != self.stddev.shape:
            raise ConfigurationError("GaussianLatent mean/stddev shapes differ")
        if np.any(self.stddev <= 0):
            raise ConfigurationError("GaussianLatent stddev must be positive")


def reparameterize(mu, sigma, seed, eps=None):
    """mu + sigma * eps with eps ~ N(0, I); gradient flows into mu and sigma."""
    if eps is None:
        rng = np.random.default_rng(seed)
        eps = rng.standard_normal(mu.value.shape).astype(mu.value.dtype)
    return ad.add(mu, ad.mul_const(sigma, eps, name="reparam.scale"), name="reparam")


def decode(received, params, cfg):
    """Zero-pad (B, 2k) received reals to 2k_max, run the decoder stack.

    Returns (position, rotvec) Vars of shape (B, 3) each.
    """
    width = received.value.shape[1]
    if width % 2:
        raise FramingError(f"decoder input width {width} is odd")
    if width > 2 * cfg.k_max:
        raise FramingError(f"received k={width // 2} exceeds k_max={cfg.k_max}")
    x = ad.zero_pad_cols(received, 2 * cfg.k_max, name="fd.pad")
    out = mlp_forward(x, params, cfg.decoder_spec(), slope=cfg.leaky_slope)
    return ad.slice_cols(out, 0, 3, name="fd.position"), ad.slice_cols(out, 3, 6, name="fd.rotvec")


class InferenceCodec:
    """Forward-only convenience wrapper around a parameter set.

    Also provides the timing hooks the latency calibrator expects.
    """

    def __init__(self, params, cfg):
        self.params = params
        self.cfg = cfg
        dtype = params.dtype
        self._probe_features = np.zeros((1, cfg.feature_dim), dtype=dtype)
        self._probe_imu = np.zeros((1, cfg.imu_dim), dtype=dtype)
        self._probe_snr = np.zeros((1, 1), dtype=dtype)
        self._probe_symbols = np.zeros((1, 2 * cfg.k_max), dtype=dtype)

    @property
    def symbol_dims(self):
        return self.cfg.symbol_dims

    def latent(self, features, imu, snr_db):
        with ad.no_grad():
            z = extract_latent(
                ad.constant(features), ad.constant(imu), ad.constant(snr_db), self.params, self.cfg
            )
        return z.value

    def gaussian(self, z_value, snr_db):
        with ad.no_grad():
            mu, sigma = variational_encode(
                ad.constant(z_value), ad.constant(snr_db), self.params, self.cfg
            )
        return GaussianLatent(mean=mu.value, stddev=sigma.value)

    def symbols(self, z_value, snr_db, k):
        with ad.no_grad():
            s = encode_symbols(ad.constant(z_value), ad.constant(snr_db), k, self.params, self.cfg)
        return s.value

    def pose_raw(self, received):
        with ad.no_grad():
            pos, rv = decode(ad.constant(received), self.params, self.cfg)
        return pos.value, rv.value

    # timing hooks for channel.calibrate_latency
    def time_encode(self, k):
        with ad.no_grad():
            z = extract_latent(
                ad.constant(self._probe_features),
                ad.constant(self._probe_imu),
                ad.constant(self._probe_snr),
                self.params,
                self.cfg,
            )
            variational_encode(z, ad.constant(self._probe_snr), self.params, self.cfg)
            encode_symbols(z, ad.constant(self._probe_snr), k, self.params, self.cfg)

    def time_decode(self):
        with ad.no_grad():
            decode(ad.constant(self._probe_symbols), self.params, self.cfg)
