"""Reverse-mode differentiation over dense numpy arrays.

The graph vocabulary is fixed to what the codec and its losses need:
affine layers, Leaky ReLU / Tanh / exp / log activations, concatenation
and slicing, pairwise unit-disk scaling of interleaved complex symbols,
the rotation-vector exponential map, and the scalar loss heads.  Values
are computed eagerly at node creation; ``backward`` replays the tape.

Arrays are batch-major: activations are (batch, width), weights are
(fan_in, fan_out).  Scalars are 0-d arrays.
"""

from contextlib import contextmanager

import numpy as np

from ..errors import ConfigurationError, NumericError

_GRAD_ENABLED = True
_FLOPS = 0
_UID = 0


@contextmanager
def no_grad():
    """Disable tape recording (inference / timing runs)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def reset_flops():
    global _FLOPS
    _FLOPS = 0


def flop_count():
    """Forward multiply-accumulate count since the last reset (affine ops only)."""
    return _FLOPS


class Var:
    """One node of the computation graph: a value plus how to push gradients back."""

    __slots__ = ("value", "grad", "parents", "vjp", "name", "uid")

    def __init__(self, value, parents=(), vjp=None, name=""):
        global _UID
        self.value = np.asarray(value)
        self.grad = None
        self.parents = parents if _GRAD_ENABLED else ()
        self.vjp = vjp if _GRAD_ENABLED else None
        self.name = name
        _UID += 1
        self.uid = _UID

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var({self.name or 'node'}, shape={self.value.shape})"


def constant(value, name="const"):
    return Var(np.asarray(value), name=name)


def _node(value, parents, vjp, name):
    return Var(value, parents=tuple(parents), vjp=vjp, name=name)


def affine(x, w, b, name="affine"):
    """x @ w + b with x (B, n), w (n, m), b (m,)."""
    global _FLOPS
    if x.value.ndim != 2 or w.value.ndim != 2 or x.value.shape[1] != w.value.shape[0]:
        raise ConfigurationError(
            f"layer '{name}': input width {x.value.shape} does not match weights {w.value.shape}"
        )
    if b.value.shape != (w.value.shape[1],):
        raise ConfigurationError(
            f"layer '{name}': bias shape {b.value.shape} does not match weights {w.value.shape}"
        )
    _FLOPS += 2 * x.value.shape[0] * w.value.shape[0] * w.value.shape[1]
    out = x.value @ w.value + b.value

    def vjp(up):
        return up @ w.value.T, x.value.T @ up, up.sum(axis=0)

    return _node(out, (x, w, b), vjp, name)


def leaky_relu(x, slope=0.01, name="leaky_relu"):
    mask = x.value >= 0
    out = np.where(mask, x.value, slope * x.value)

    def vjp(up):
        return (up * np.where(mask, 1.0, slope).astype(x.value.dtype),)

    return _node(out, (x,), vjp, name)


def tanh(x, name="tanh"):
    out = np.tanh(x.value)

    def vjp(up):
        return (up * (1.0 - out * out),)

    return _node(out, (x,), vjp, name)


def exp(x, name="exp"):
    out = np.exp(x.value)

    def vjp(up):
        return (up * out,)

    return _node(out, (x,), vjp, name)


def log(x, name="log"):
    out = np.log(x.value)

    def vjp(up):
        return (up / x.value,)

    return _node(out, (x,), vjp, name)


def clip(x, lo, hi, name="clip"):
    out = np.clip(x.value, lo, hi)
    passthrough = (x.value >= lo) & (x.value <= hi)

    def vjp(up):
        return (up * passthrough.astype(x.value.dtype),)

    return _node(out, (x,), vjp, name)


def add(x, y, name="add"):
    def vjp(up):
        return up, up

    return _node(x.value + y.value, (x, y), vjp, name)


def sub(x, y, name="sub"):
    def vjp(up):
        return up, -up

    return _node(x.value - y.value, (x, y), vjp, name)


def mul(x, y, name="mul"):
    def vjp(up):
        return up * y.value, up * x.value

    return _node(x.value * y.value, (x, y), vjp, name)


def add_const(x, c, name="add_const"):
    c = np.asarray(c, dtype=x.value.dtype)

    def vjp(up):
        return (up,)

    return _node(x.value + c, (x,), vjp, name)


def mul_const(x, c, name="mul_const"):
    c = np.asarray(c, dtype=x.value.dtype)

    def vjp(up):
        return (up * c,)

    return _node(x.value * c, (x,), vjp, name)


def square(x, name="square"):
    def vjp(up):
        return (up * (2.0 * x.value),)

    return _node(x.value * x.value, (x,), vjp, name)


def concat_cols(parts, name="concat"):
    widths = [p.value.shape[1] for p in parts]
    out = np.concatenate([p.value for p in parts], axis=1)
    edges = np.cumsum([0] + widths)

    def vjp(up):
        return tuple(up[:, edges[i]:edges[i + 1]] for i in range(len(parts)))

    return _node(out, tuple(parts), vjp, name)


def slice_cols(x, start, stop, name="slice"):
    def vjp(up):
        g = np.zeros_like(x.value)
        g[:, start:stop] = up
        return (g,)

    return _node(x.value[:, start:stop], (x,), vjp, name)


def zero_pad_cols(x, total_width, name="zero_pad"):
    b, w = x.value.shape
    if w > total_width:
        raise ConfigurationError(f"zero_pad: input width {w} exceeds target {total_width}")
    out = np.zeros((b, total_width), dtype=x.value.dtype)
    out[:, :w] = x.value

    def vjp(up):
        return (up[:, :w],)

    return _node(out, (x,), vjp, name)


def take_rows(x, idx, name="take_rows"):
    idx = np.asarray(idx)

    def vjp(up):
        g = np.zeros_like(x.value)
        np.add.at(g, idx, up)
        return (g,)

    return _node(x.value[idx], (x,), vjp, name)


def sum_cols(x, name="sum_cols"):
    def vjp(up):
        return (np.repeat(up[:, None], x.value.shape[1], axis=1),)

    return _node(x.value.sum(axis=1), (x,), vjp, name)


def sum_all(x, name="sum_all"):
    def vjp(up):
        return (np.full_like(x.value, up),)

    return _node(x.value.sum(), (x,), vjp, name)


def mean_all(x, name="mean_all"):
    n = x.value.size

    def vjp(up):
        return (np.full_like(x.value, up / n),)

    return _node(x.value.mean(), (x,), vjp, name)


def l2norm_rows(x, name="l2norm"):
    """Row-wise Euclidean norm, gradient guarded at the origin."""
    out = np.sqrt((x.value * x.value).sum(axis=1))

    def vjp(up):
        denom = np.maximum(out, 1e-12)
        return ((up / denom)[:, None] * x.value,)

    return _node(out, (x,), vjp, name)


def quat_dot_rows(a, b, name="quat_dot"):
    def vjp(up):
        return up[:, None] * b.value, up[:, None] * a.value

    return _node((a.value * b.value).sum(axis=1), (a, b), vjp, name)


def absval(x, name="abs"):
    sgn = np.sign(x.value)

    def vjp(up):
        return (up * sgn,)

    return _node(np.abs(x.value), (x,), vjp, name)


def power_normalize_pairs(x, name="power_normalize"):
    """Scale each (real, imag) column pair onto the closed unit disk.

    Pairs with magnitude <= 1 pass through unchanged (identity gradient);
    larger pairs are radially projected, with the projection Jacobian.
    """
    b, w = x.value.shape
    if w % 2:
        raise ConfigurationError(f"power_normalize: expected even width, got {w}")
    pairs = x.value.reshape(b, w // 2, 2)
    r = np.sqrt((pairs * pairs).sum(axis=2))
    over = r > 1.0
    scale = np.where(over, 1.0 / np.maximum(r, 1e-30), 1.0).astype(x.value.dtype)
    out = (pairs * scale[:, :, None]).reshape(b, w)

    def vjp(up):
        up_pairs = up.reshape(b, w // 2, 2)
        # identity branch
        g = up_pairs * scale[:, :, None]
        # projection branch subtracts the radial component: d(x/r) = (I - ooT)/r
        dot = (up_pairs * pairs).sum(axis=2)
        r3 = np.maximum(r, 1e-30) ** 3
        corr = np.where(over, dot / r3, 0.0).astype(x.value.dtype)
        g = g - corr[:, :, None] * pairs
        return (g.reshape(b, w),)

    return _node(out, (x,), vjp, name)


def rotvec_to_quat_rows(v, name="rotvec_to_quat"):
    """Exponential map rows of axis-angle 3-vectors to unit quaternions (w,x,y,z).

    Series expansion below theta ~ 1e-4 keeps the value and Jacobian finite
    at the identity rotation.
    """
    theta = np.sqrt((v.value * v.value).sum(axis=1))
    small = theta < 1e-4
    half = 0.5 * theta
    # h(theta) = sin(theta/2)/theta, series 1/2 - theta^2/48 near zero
    with np.errstate(invalid="ignore", divide="ignore"):
        h = np.where(small, 0.5 - theta * theta / 48.0, np.sin(half) / np.where(small, 1.0, theta))
    w = np.cos(half)
    xyz = v.value * h[:, None]
    out = np.concatenate([w[:, None], xyz], axis=1).astype(v.value.dtype)

    # h'(theta)/theta, series -1/24 + theta^2/960 near zero
    with np.errstate(invalid="ignore", divide="ignore"):
        hp_over_theta = np.where(
            small,
            -1.0 / 24.0 + theta * theta / 960.0,
            (0.5 * w - h) / np.where(small, 1.0, theta * theta),
        )

    def vjp(up):
        up_w = up[:, 0]
        up_xyz = up[:, 1:]
        # dw/dv = -h * v / 2
        g = (-0.5 * up_w * h)[:, None] * v.value
        # dxyz_i/dv_j = h delta_ij + v_i v_j h'/theta
        g = g + up_xyz * h[:, None]
        g = g + ((up_xyz * v.value).sum(axis=1) * hp_over_theta)[:, None] * v.value
        return (g.astype(v.value.dtype),)

    return _node(out, (v,), vjp, name)


def _first_nonfinite(loss):
    """Walk the graph in creation order, return the first node holding a non-finite value."""
    seen = set()
    stack = [loss]
    nodes = []
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node.parents)
    for node in sorted(nodes, key=lambda n: n.uid):
        if not np.all(np.isfinite(node.value)):
            return node
    return loss


def backward(loss):
    """Accumulate gradients of a scalar loss into every reachable node's .grad."""
    if loss.value.size != 1:
        raise ConfigurationError(f"backward expects a scalar loss, got shape {loss.value.shape}")
    if not np.isfinite(loss.value):
        bad = _first_nonfinite(loss)
        raise NumericError(f"non-finite loss; first non-finite node: '{bad.name}' (uid {bad.uid})")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    for node in order:
        node.grad = np.zeros_like(node.value)
    loss.grad = np.ones_like(loss.value)

    for node in reversed(order):
        if node.vjp is None:
            continue
        contribs = node.vjp(node.grad)
        for parent, g in zip(node.parents, contribs):
            parent.grad = parent.grad + g
