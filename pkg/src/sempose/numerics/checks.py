"""Finite-difference verification of the analytic gradients."""

import numpy as np

from ..errors import ConfigurationError
from .mlp import backprop


def _ridders(central, h0, levels=10, shrink=2.0):
    """Ridders' polynomial-extrapolated central difference.

    Builds the full Neville tableau over geometrically shrinking steps and
    returns the entry with the smallest internal error estimate.  Large
    steps serve coordinates whose gradient sits near the rounding floor;
    small steps serve probes whose wide stencils straddle activation kinks,
    so the ladder always runs down to h0 / shrink^(levels-1).
    """
    tab = [[central(h0)]]
    best = tab[0][0]
    best_err = np.inf
    hh = h0
    for i in range(1, levels):
        hh /= shrink
        row = [central(hh)]
        fac = shrink * shrink
        for j in range(1, i + 1):
            prev = tab[i - 1]
            row.append((row[j - 1] * fac - prev[j - 1]) / (fac - 1.0))
            fac *= shrink * shrink
            errt = max(abs(row[j] - row[j - 1]), abs(row[j] - prev[j - 1]))
            if errt <= best_err:
                best, best_err = row[j], errt
        tab.append(row)
    return best


def finite_diff_check(loss_fn, params, probes, h=2e-3, seed=0, adaptive=True):
    """Max relative error between analytic and finite-difference gradients.

    ``loss_fn`` rebuilds the loss graph from the current parameter values and
    must be deterministic (fix every noise seed before calling).  ``probes``
    coordinates are drawn without replacement across all parameter tensors.
    Requires 64-bit parameters; 32-bit rounding would drown the differences.

    Adaptive mode runs Ridders' method per coordinate starting from ``h``;
    ``adaptive=False`` gives the plain second-order stencil at ``h``.
    """
    if params.dtype != np.float64:
        raise ConfigurationError("finite_diff_check requires float64 parameters")

    flats = []
    for name, (w, b) in params.items():
        flats.append((f"{name}.w", w.value))
        flats.append((f"{name}.b", b.value))
    total = sum(arr.size for _, arr in flats)
    if total == 0 or probes == 0:
        return 0.0

    grads = backprop(loss_fn(), params)
    flat_grads = []
    for name, (gw, gb) in grads.items():
        flat_grads.append((f"{name}.w", gw))
        flat_grads.append((f"{name}.b", gb))
    grad_by_name = dict(flat_grads)

    rng = np.random.default_rng(seed)
    count = min(probes, total)
    coords = rng.choice(total, size=count, replace=False)

    offsets = np.cumsum([0] + [arr.size for _, arr in flats])

    def central(arr, idx, orig, step):
        arr[idx] = orig + step
        up = float(loss_fn().value)
        arr[idx] = orig - step
        down = float(loss_fn().value)
        arr[idx] = orig
        return (up - down) / (2.0 * step)

    worst = 0.0
    for c in coords:
        slot = np.searchsorted(offsets, c, side="right") - 1
        name, arr = flats[slot]
        idx = np.unravel_index(c - offsets[slot], arr.shape)
        orig = arr[idx]
        if adaptive:
            numeric = _ridders(lambda step: central(arr, idx, orig, step), h)
        else:
            numeric = central(arr, idx, orig, h)
        analytic = float(grad_by_name[name][idx])
        err = abs(analytic - numeric) / max(1e-12, abs(numeric))
        worst = max(worst, err)
    return worst
