"""Differentiable operations on :class:`Tensor`.

Each op computes its value with numpy and registers a backward closure that
returns one gradient array per parent (``None`` for non-differentiable inputs).
"""
from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor, _record_macs, as_tensor, make_result

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra < 0:
        raise ValueError(f"cannot reduce gradient of shape {grad.shape} to {shape}")
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _check_broadcast(a, b, opname):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{opname}: shapes {a.shape} and {b.shape} are not broadcastable") from None


# ---------------------------------------------------------------- arithmetic


def add(a, b):
    a, b = _pair(a, b)
    _check_broadcast(a, b, "add")

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return make_result(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = _pair(a, b)
    _check_broadcast(a, b, "sub")

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return make_result(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = _pair(a, b)
    _check_broadcast(a, b, "mul")

    def backward(g):
        ga = unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return make_result(a.data * b.data, (a, b), backward, "mul")


def div(a, b):
    a, b = _pair(a, b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data

    def backward(g):
        ga = unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = unbroadcast(-g * out / b.data, b.shape) if b.requires_grad else None
        return ga, gb

    return make_result(out, (a, b), backward, "div")


def neg(a):
    return make_result(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, exponent):
    if isinstance(exponent, Tensor):
        raise TypeError("power only supports constant exponents")
    p = float(exponent)

    def backward(g):
        return (g * p * a.data ** (p - 1),)

    return make_result(a.data**p, (a,), backward, "pow")


def elementwise(op, a, b=None):
    """Dispatch ``op`` in {add, sub, mul, silu, gelu} on one or two operands."""
    binary = {"add": add, "sub": sub, "mul": mul}
    unary = {"silu": silu, "gelu": gelu}
    if op in binary:
        if b is None:
            raise ValueError(f"{op} needs two operands")
        return binary[op](a, b)
    if op in unary:
        return unary[op](as_tensor(a))
    raise ValueError(f"unknown elementwise op {op!r}")


# ---------------------------------------------------------------- matmul


def matmul(a, b):
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs operands of rank >= 2, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul: inner dimensions differ for shapes {a.shape} and {b.shape}")
    try:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ValueError(f"matmul: batch dims of {a.shape} and {b.shape} are not broadcastable") from None
    m, k = a.shape[-2:]
    n = b.shape[-1]
    _record_macs(int(np.prod(batch, dtype=np.int64)) * m * k * n)

    def backward(g):
        ga = unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if a.requires_grad else None
        gb = None
        if b.requires_grad:
            if b.ndim == 2:
                # shared weight matrix: fold every batch dim into one product
                gb = a.data.reshape(-1, k).T @ np.broadcast_to(g, batch + (m, n)).reshape(-1, n)
            else:
                gb = unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return make_result(a.data @ b.data, (a, b), backward, "matmul")


# ---------------------------------------------------------------- reductions


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum(a, axis=None, keepdims=False):  # noqa: A001
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result(out, (a,), backward, "sum")


def mean(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes]))
    return sum(a, axis=axes, keepdims=keepdims) * (1.0 / count)


# ---------------------------------------------------------------- shape ops


def reshape(a, shape):
    out = a.data.reshape(shape)
    return make_result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None):
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(ax % a.ndim for ax in axes)
    inverse = tuple(np.argsort(axes))
    return make_result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose")


def getitem(a, index):
    out = a.data[index]
    if isinstance(out, np.ndarray):
        out = out.copy()

    basic = _is_basic_index(index)

    def backward(g):
        full = np.zeros_like(a.data)
        if basic:
            full[index] = g
        else:
            np.add.at(full, index, g)
        return (full,)

    return make_result(out, (a,), backward, "getitem")


def _is_basic_index(index):
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis for i in items)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_result(out, tuple(tensors), backward, "concat")


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    expanded = [reshape(t, t.shape[:axis % (t.ndim + 1)] + (1,) + t.shape[axis % (t.ndim + 1):]) for t in tensors]
    return concat(expanded, axis=axis)


def split(a, sections, axis=-1):
    """Split into ``sections`` equal parts along ``axis``."""
    axis = axis % a.ndim
    size = a.shape[axis] // sections
    if size * sections != a.shape[axis]:
        raise ValueError(f"cannot split axis of size {a.shape[axis]} into {sections} parts")
    parts = []
    for i in range(sections):
        index = [slice(None)] * a.ndim
        index[axis] = slice(i * size, (i + 1) * size)
        parts.append(getitem(a, tuple(index)))
    return parts


def astype(a, dtype):
    src = a.data.dtype
    return make_result(a.data.astype(dtype), (a,), lambda g: (g.astype(src),), "astype")


# ---------------------------------------------------------------- pointwise


def exp(a):
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    return make_result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def sqrt(a):
    out = np.sqrt(a.data)
    return make_result(out, (a,), lambda g: (g * 0.5 / out,), "sqrt")


def tanh(a):
    out = np.tanh(a.data)
    return make_result(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def sigmoid(a):
    out = _sigmoid(a.data)
    return make_result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def silu(a):
    s = _sigmoid(a.data)
    out = a.data * s

    def backward(g):
        return (g * (s + a.data * s * (1.0 - s)),)

    return make_result(out, (a,), backward, "silu")


def gelu(a):
    """Tanh-approximated GELU."""
    x = a.data
    inner = _SQRT_2_OVER_PI * (x + 0.044715 * (x * x * x))
    th = np.tanh(inner)
    out = 0.5 * x * (1.0 + th)

    def backward(g):
        dinner = _SQRT_2_OVER_PI * (1.0 + 3 * 0.044715 * (x * x))
        return (g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner),)

    return make_result(out, (a,), backward, "gelu")


def sin(a):
    return make_result(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),), "sin")


def cos(a):
    return make_result(np.cos(a.data), (a,), lambda g: (-g * np.sin(a.data),), "cos")


# ---------------------------------------------------------------- attention pieces


def softmax(a, axis=-1):
    if not -a.ndim <= axis < a.ndim:
        raise ValueError(f"softmax axis {axis} out of range for rank {a.ndim}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (a,), backward, "softmax")


def masked_fill(a, mask, value):
    """Replace entries where ``mask`` is True by ``value``; no gradient flows there."""
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
    out = np.where(mask, np.asarray(value, dtype=a.dtype), a.data)
    return make_result(out, (a,), lambda g: (np.where(mask, 0.0, g).astype(g.dtype),), "masked_fill")


def rmsnorm(a, axis=-1, eps=1e-6):
    """``a / sqrt(mean(a**2) + eps)`` along ``axis``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = a.shape[axis]
    r = np.sqrt((a.data * a.data).mean(axis=axis, keepdims=True) + eps)
    out = a.data / r

    def backward(g):
        dot = (g * a.data).sum(axis=axis, keepdims=True)
        return (g / r - a.data * dot / (n * r**3),)

    return make_result(out, (a,), backward, "rmsnorm")


def qk_norm(a, axis=-1, eps=1e-12):
    """``a / sqrt(sum(a**2) + eps)`` along ``axis`` (unit L2 norm)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=True) + eps)
    out = a.data / r

    def backward(g):
        dot = (g * a.data).sum(axis=axis, keepdims=True)
        return (g / r - a.data * dot / r**3,)

    return make_result(out, (a,), backward, "qk_norm")


def normalize(kind, a, axis=-1, eps=None):
    if kind == "rmsnorm":
        return rmsnorm(a, axis=axis, eps=1e-6 if eps is None else eps)
    if kind == "qk_norm":
        return qk_norm(a, axis=axis, eps=1e-12 if eps is None else eps)
    raise ValueError(f"unknown normalization {kind!r}")
