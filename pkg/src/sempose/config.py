"""Flat key-value run configuration.

The config file is plain text, one ``key = value`` per line, ``#`` comments.
Keys mirror the training, policy, and scene dataclass fields; every default
matches the published operating point (alpha 0.7, beta 1, eta 0.2, gamma 100,
learning rate 1e-4, batch 64, 16 ms budget, symbol dims 64..512).
"""

from dataclasses import dataclass, field, fields
from pathlib import Path

from .codec import DEFAULT_SYMBOL_DIMS
from .dataset import SceneConfig
from .errors import ConfigurationError, DataIOError
from .policy import DEFAULT_LATENCY_BUDGET_MS
from .vib import LossWeights


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-4
    alpha: float = 0.7
    beta: float = 1.0
    eta: float = 0.2
    gamma: float = 100.0
    recon_temperature: float = 0.05
    latency_budget_ms: float = DEFAULT_LATENCY_BUDGET_MS
    symbol_dims: tuple = DEFAULT_SYMBOL_DIMS
    seed: int = 0
    precision: str = "float32"
    channel_mode: str = "awgn"      # "awgn" | "noiseless"
    fixed_k: int = 0                # > 0 bypasses the policy with a single head
    log_every: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ConfigurationError(f"precision must be float32 or float64, got {self.precision}")
        if self.channel_mode not in ("awgn", "noiseless"):
            raise ConfigurationError(f"channel_mode must be awgn or noiseless, got {self.channel_mode}")
        self.symbol_dims = tuple(int(k) for k in self.symbol_dims)
        if self.fixed_k and self.fixed_k not in self.symbol_dims:
            self.symbol_dims = tuple(sorted(set(self.symbol_dims) | {self.fixed_k}))

    def weights(self):
        return LossWeights(
            alpha=self.alpha,
            beta=self.beta,
            eta=self.eta,
            gamma=self.gamma,
            recon_temperature=self.recon_temperature,
        )


def parse_config_text(text):
    """Flat ``key = value`` lines into a string map."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value', got '{raw.strip()}'")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigurationError(f"config line {lineno}: empty key")
        out[key] = value.strip()
    return out


def read_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise DataIOError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text)


def _coerce(raw, template):
    if isinstance(template, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        elem = template[0] if template else 0.0
        return tuple(type(elem)(p) for p in parts)
    return raw


def apply_overrides(instance, overrides, consumed=None):
    """Set matching dataclass fields from a flat string map."""
    names = {f.name for f in fields(instance)}
    for key, raw in overrides.items():
        if key not in names:
            continue
        current = getattr(instance, key)
        try:
            setattr(instance, key, _coerce(str(raw), current))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"config key '{key}': cannot parse '{raw}' ({e})") from e
        if consumed is not None:
            consumed.add(key)
    if hasattr(instance, "__post_init__"):
        instance.__post_init__()
    return instance


def build_configs(overrides):
    """One flat map -> (TrainConfig, SceneConfig); unknown keys are errors.

    Keys present in both dataclasses (e.g. ``seed``) apply to both.
    """
    train_cfg = TrainConfig()
    scene_cfg = SceneConfig()
    consumed = set()
    apply_overrides(train_cfg, overrides, consumed)
    apply_overrides(scene_cfg, overrides, consumed)
    unknown = set(overrides) - consumed
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return train_cfg, scene_cfg
