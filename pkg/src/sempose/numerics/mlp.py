"""Named parameter sets and the fixed fully-connected layer stack."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from . import autodiff as ad

ACTIVATIONS = ("identity", "leaky_relu", "tanh", "exp")


@dataclass(frozen=True)
class LayerSpec:
    name: str
    fan_in: int
    fan_out: int
    activation: str = "leaky_relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"layer '{self.name}': unknown activation '{self.activation}'"
            )


class ParamSet:
    """Named map from layer identifier to (weights, biases) leaf nodes."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._layers = {}

    def add(self, name, weights, biases):
        if name in self._layers:
            raise ConfigurationError(f"duplicate layer name '{name}'")
        w = np.ascontiguousarray(weights, dtype=self.dtype)
        b = np.ascontiguousarray(biases, dtype=self.dtype)
        if w.ndim != 2 or b.shape != (w.shape[1],):
            raise ConfigurationError(
                f"layer '{name}': weights {w.shape} and biases {b.shape} are inconsistent"
            )
        self._layers[name] = (ad.Var(w, name=f"{name}.w"), ad.Var(b, name=f"{name}.b"))

    def add_initialized(self, name, fan_in, fan_out, rng):
        """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        self.add(name, w, np.zeros(fan_out))

    def __getitem__(self, name):
        try:
            return self._layers[name]
        except KeyError:
            raise ConfigurationError(f"unknown layer '{name}'") from None

    def __contains__(self, name):
        return name in self._layers

    def __len__(self):
        return len(self._layers)

    def names(self):
        return list(self._layers)

    def items(self):
        return self._layers.items()

    def arrays(self):
        return {name: (w.value, b.value) for name, (w, b) in self._layers.items()}

    def num_values(self):
        return sum(w.value.size + b.value.size for w, b in self._layers.values())

    def astype(self, dtype):
        out = ParamSet(dtype=dtype)
        for name, (w, b) in self._layers.items():
            out.add(name, w.value, b.value)
        return out


def _activate(x, activation, slope):
    if activation == "identity":
        return x
    if activation == "leaky_relu":
        return ad.leaky_relu(x, slope=slope)
    if activation == "tanh":
        return ad.tanh(x)
    if activation == "exp":
        return ad.exp(x)
    raise ConfigurationError(f"unknown activation '{activation}'")


def mlp_forward(x, params, spec, slope=0.01):
    """Run a stack of affine layers with per-layer activations.

    ``x`` is a (batch, width) Var; ``spec`` a sequence of LayerSpec.
    Intermediates stay alive on the tape for the backward pass.
    """
    h = x
    for layer in spec:
        if h.value.shape[1] != layer.fan_in:
            raise ConfigurationError(
                f"layer '{layer.name}': expected input width {layer.fan_in}, got {h.value.shape[1]}"
            )
        w, b = params[layer.name]
        h = ad.affine(h, w, b, name=layer.name)
        h = _activate(h, layer.activation, slope)
    return h


def backprop(loss, params):
    """Gradients of a scalar loss for every layer; zeros where unreachable."""
    ad.backward(loss)
    grads = {}
    for name, (w, b) in params.items():
        gw = w.grad if w.grad is not None else np.zeros_like(w.value)
        gb = b.grad if b.grad is not None else np.zeros_like(b.value)
        grads[name] = (gw, gb)
        w.grad = None
        b.grad = None
    return grads
