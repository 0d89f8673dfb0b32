from . import autodiff
from .autodiff import (
    Var,
    backward,
    constant,
    flop_count,
    no_grad,
    reset_flops,
)
from .adam import AdamState, adam_step
from .checks import finite_diff_check
from .checkpoint import load_params, save_params
from .mlp import LayerSpec, ParamSet, backprop, mlp_forward

__all__ = [
    "AdamState",
    "LayerSpec",
    "ParamSet",
    "Var",
    "adam_step",
    "autodiff",
    "backprop",
    "backward",
    "constant",
    "finite_diff_check",
    "flop_count",
    "load_params",
    "mlp_forward",
    "no_grad",
    "reset_flops",
    "save_params",
]
