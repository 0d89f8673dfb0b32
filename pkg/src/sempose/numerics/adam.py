"""Bias-corrected Adam over named parameter sets."""

import numpy as np

from ..errors import ConfigurationError


class AdamState:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.moments = {
            name: (
                np.zeros_like(w.value),
                np.zeros_like(w.value),
                np.zeros_like(b.value),
                np.zeros_like(b.value),
            )
            for name, (w, b) in params.items()
        }


def adam_step(params, grads, state):
    """One in-place Adam update; advances the step counter."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for name, (w, b) in params.items():
        gw, gb = grads[name]
        if gw.shape != w.value.shape or gb.shape != b.value.shape:
            raise ConfigurationError(
                f"adam: gradient shapes {gw.shape}/{gb.shape} do not match layer '{name}'"
            )
        mw, vw, mb, vb = state.moments[name]
        for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.value -= (state.lr / corr1) * m / (np.sqrt(v / corr2) + state.eps)
    return params
