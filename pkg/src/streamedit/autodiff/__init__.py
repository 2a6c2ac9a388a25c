"""Minimal dense-tensor engine with reverse-mode automatic differentiation."""
from . import functional
from .functional import (
    concat,
    elementwise,
    gelu,
    matmul,
    normalize,
    qk_norm,
    rmsnorm,
    silu,
    softmax,
)
from .gradcheck import gradcheck, numerical_grad, relative_error
from .io import load_state, load_tensor, save_state, save_tensor
from .nn import EMA, MLP, Adam, Linear, Module, parameter
from .tensor import (
    Tensor,
    count_macs,
    default_dtype,
    get_default_dtype,
    is_grad_enabled,
    mac_scope,
    no_grad,
)


def backward(loss):
    """Populate ``grad`` on every leaf reachable from the scalar ``loss``."""
    loss.backward()


__all__ = [
    "Adam",
    "EMA",
    "Linear",
    "MLP",
    "Module",
    "Tensor",
    "backward",
    "concat",
    "count_macs",
    "default_dtype",
    "elementwise",
    "functional",
    "gelu",
    "get_default_dtype",
    "gradcheck",
    "is_grad_enabled",
    "load_state",
    "load_tensor",
    "mac_scope",
    "matmul",
    "no_grad",
    "normalize",
    "numerical_grad",
    "parameter",
    "qk_norm",
    "relative_error",
    "rmsnorm",
    "save_state",
    "save_tensor",
    "silu",
    "softmax",
]
