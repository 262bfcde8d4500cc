"""
Primitive set for the sequence networks and objectives.

Arrays are either (T, F) or (B, T, F); the time axis is always -2 and the
feature axis -1. Broadcasting is limited to what the architectures need:
a bias vector added along the last axis.
"""

from typing import Optional, Sequence

import numpy as np

from .errors import ShapeError
from .numerics import LOG_FLOOR, log1m as _log1m, logsumexp, stable_sigmoid
from .tensor import Tensor, TensorLike, apply_primitive, register_primitive


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ShapeError(message)


def _same_shape(*values, **_attrs) -> None:
    first = values[0].shape
    for v in values[1:]:
        _require(v.shape == first, f"shape mismatch: {first} vs {v.shape}")


def _time_axis(x: np.ndarray) -> int:
    return -2 if x.ndim >= 2 else 0


# -- linear algebra ---------------------------------------------------------

def _check_matmul(a, b):
    _require(a.ndim == 2 and b.ndim == 2, f"matmul needs 2-D inputs, got {a.shape} and {b.shape}")
    _require(a.shape[1] == b.shape[0], f"matmul inner dimensions differ: {a.shape} @ {b.shape}")


register_primitive(
    "matmul",
    forward=lambda a, b: a @ b,
    vjp=lambda g, out, a, b: (g @ b.T, a.T @ g),
    check=_check_matmul,
)


def _check_affine(x, w, b):
    _require(x.ndim in (2, 3), f"affine input must be (T, I) or (B, T, I), got {x.shape}")
    _require(w.ndim == 2 and x.shape[-1] == w.shape[0], f"affine weight {w.shape} does not fit input {x.shape}")
    _require(b.shape == (w.shape[1],), f"affine bias {b.shape} does not fit weight {w.shape}")


def _affine_vjp(g, out, x, w, b):
    g2 = g.reshape(-1, w.shape[1])
    return g @ w.T, x.reshape(-1, w.shape[0]).T @ g2, g2.sum(axis=0)


register_primitive("affine", forward=lambda x, w, b: x @ w + b, vjp=_affine_vjp, check=_check_affine)


# -- elementwise ------------------------------------------------------------

register_primitive("add", forward=lambda a, b: a + b, vjp=lambda g, out, a, b: (g, g), check=_same_shape)
register_primitive("sub", forward=lambda a, b: a - b, vjp=lambda g, out, a, b: (g, -g), check=_same_shape)
register_primitive("mul", forward=lambda a, b: a * b, vjp=lambda g, out, a, b: (g * b, g * a), check=_same_shape)


def _check_mul_const(x, const):
    _require(np.shape(const) == x.shape, f"constant of shape {np.shape(const)} does not match {x.shape}")


register_primitive(
    "mul_const",
    forward=lambda x, const: x * const,
    vjp=lambda g, out, x, const: (g * const,),
    check=_check_mul_const,
)
register_primitive(
    "scale",
    forward=lambda x, factor: x * factor,
    vjp=lambda g, out, x, factor: (g * factor,),
)
register_primitive(
    "sigmoid",
    forward=lambda x: stable_sigmoid(x),
    vjp=lambda g, out, x: (g * out * (1.0 - out),),
)
register_primitive(
    "tanh",
    forward=lambda x: np.tanh(x),
    vjp=lambda g, out, x: (g * (1.0 - out * out),),
)
register_primitive(
    "relu",
    forward=lambda x: np.maximum(x, 0.0),
    vjp=lambda g, out, x: (g * (x > 0.0),),
)
register_primitive(
    "exp",
    forward=lambda x: np.exp(x),
    vjp=lambda g, out, x: (g * out,),
)


def _softmax(x):
    shifted = np.exp(x - np.max(x, axis=-1, keepdims=True))
    return shifted / np.sum(shifted, axis=-1, keepdims=True)


register_primitive(
    "softmax",
    forward=_softmax,
    vjp=lambda g, out, x: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),),
)
register_primitive(
    "log_softmax",
    forward=lambda x: x - logsumexp(x, axis=-1, keepdims=True),
    vjp=lambda g, out, x: (g - np.exp(out) * np.sum(g, axis=-1, keepdims=True),),
)


# -- guarded logs -----------------------------------------------------------
# Each takes a ``floor`` attribute; where the log argument is below it the
# output is log(floor) and the gradient is zero.

def _log_vjp(g, out, x, floor=LOG_FLOOR):
    live = x > floor
    return (np.divide(g, x, out=np.zeros_like(g), where=live),)


register_primitive(
    "log",
    forward=lambda x, floor=LOG_FLOOR: np.log(np.maximum(x, floor)),
    vjp=_log_vjp,
)


def _log1m_vjp(g, out, x, floor=LOG_FLOOR):
    complement = 1.0 - x
    live = complement > floor
    return (-np.divide(g, complement, out=np.zeros_like(g), where=live),)


register_primitive("log1m", forward=lambda x, floor=LOG_FLOOR: _log1m(x, floor), vjp=_log1m_vjp)


def _check_nonpositive(x, **_attrs):
    _require(bool(np.all(x <= 0.0)), "log-complement input must be <= 0")


register_primitive(
    "neg_expm1",
    forward=lambda x: -np.expm1(x),
    vjp=lambda g, out, x: (-g * np.exp(x),),
    check=_check_nonpositive,
)


def _log_neg_expm1(x, floor=LOG_FLOOR):
    y = -np.expm1(x)
    return np.log(np.maximum(y, floor))


def _log_neg_expm1_vjp(g, out, x, floor=LOG_FLOOR):
    y = -np.expm1(x)
    live = y > floor
    # d/dx log(1 - e^x) = -e^x / (1 - e^x)
    return (-np.divide(g * np.exp(x), y, out=np.zeros_like(g), where=live),)


register_primitive("log_neg_expm1", forward=_log_neg_expm1, vjp=_log_neg_expm1_vjp, check=_check_nonpositive)


# -- reductions -------------------------------------------------------------

register_primitive(
    "sum",
    forward=lambda x: np.sum(x),
    vjp=lambda g, out, x: (np.full(x.shape, g.item()),),
)


def _check_nonempty_time(x, **_attrs):
    _require(x.ndim >= 1 and x.shape[_time_axis(x)] > 0, f"empty time axis in shape {x.shape}")


def _first_argmax(x, axis):
    return np.expand_dims(np.argmax(x, axis=axis), axis)


def _max_over_time(x):
    axis = _time_axis(x)
    return np.squeeze(np.take_along_axis(x, _first_argmax(x, axis), axis=axis), axis=axis)


def _max_over_time_vjp(g, out, x):
    axis = _time_axis(x)
    grad = np.zeros_like(x)
    np.put_along_axis(grad, _first_argmax(x, axis), np.expand_dims(g, axis), axis=axis)
    return (grad,)


register_primitive("max_over_time", forward=_max_over_time, vjp=_max_over_time_vjp, check=_check_nonempty_time)


def _sum_over_time_vjp(g, out, x):
    axis = _time_axis(x)
    return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)


register_primitive(
    "sum_over_time",
    forward=lambda x: np.sum(x, axis=_time_axis(x)),
    vjp=_sum_over_time_vjp,
    check=_check_nonempty_time,
)


# -- time-axis structure ----------------------------------------------------

def _check_concat(*values, axis=-1):
    ndim = values[0].ndim
    for v in values:
        _require(v.ndim == ndim, "concat inputs must have equal rank")
    for dim in range(ndim):
        if dim == axis % ndim:
            continue
        sizes = {v.shape[dim] for v in values}
        _require(len(sizes) == 1, f"concat inputs differ on axis {dim}: {sorted(sizes)}")


def _concat_vjp(g, out, *values, axis=-1):
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]
    return tuple(np.split(g, bounds, axis=axis))


register_primitive(
    "concat",
    forward=lambda *values, axis=-1: np.concatenate(values, axis=axis),
    vjp=_concat_vjp,
    check=_check_concat,
)


def _check_slice_time(x, start, stop):
    _require(x.ndim >= 2, f"slice_time needs (T, F) or (B, T, F), got {x.shape}")
    _require(0 <= start < stop <= x.shape[-2], f"slice [{start}, {stop}) outside time axis of length {x.shape[-2]}")


def _slice_time_vjp(g, out, x, start, stop):
    grad = np.zeros_like(x)
    grad[..., start:stop, :] = g
    return (grad,)


register_primitive(
    "slice_time",
    forward=lambda x, start, stop: x[..., start:stop, :],
    vjp=_slice_time_vjp,
    check=_check_slice_time,
)


def _unfold(x, kernel):
    pad = kernel // 2
    widths = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (0, 0)]
    padded = np.pad(x, widths)
    frames = x.shape[-2]
    return np.concatenate([padded[..., k:k + frames, :] for k in range(kernel)], axis=-1)


def _check_conv1d(x, w, b):
    _require(x.ndim in (2, 3), f"conv1d input must be (T, C) or (B, T, C), got {x.shape}")
    _require(w.ndim == 3 and w.shape[1] == x.shape[-1], f"conv1d weight {w.shape} does not fit input {x.shape}")
    _require(w.shape[0] % 2 == 1, f"conv1d kernel width must be odd, got {w.shape[0]}")
    _require(b.shape == (w.shape[2],), f"conv1d bias {b.shape} does not fit weight {w.shape}")


def _conv1d(x, w, b):
    kernel, channels_in, channels_out = w.shape
    return _unfold(x, kernel) @ w.reshape(kernel * channels_in, channels_out) + b


def _conv1d_vjp(g, out, x, w, b):
    kernel, channels_in, channels_out = w.shape
    flat_w = w.reshape(kernel * channels_in, channels_out)
    unfolded = _unfold(x, kernel)
    g2 = g.reshape(-1, channels_out)
    grad_w = (unfolded.reshape(-1, kernel * channels_in).T @ g2).reshape(w.shape)
    grad_b = g2.sum(axis=0)

    grad_unfolded = g @ flat_w.T
    pad = kernel // 2
    frames = x.shape[-2]
    padded_shape = x.shape[:-2] + (frames + 2 * pad, channels_in)
    grad_padded = np.zeros(padded_shape)
    for k in range(kernel):
        grad_padded[..., k:k + frames, :] += grad_unfolded[..., k * channels_in:(k + 1) * channels_in]
    return grad_padded[..., pad:pad + frames, :], grad_w, grad_b


register_primitive("conv1d", forward=_conv1d, vjp=_conv1d_vjp, check=_check_conv1d)


def _check_max_pool(x, factor):
    _require(x.ndim >= 2, f"max_pool_time needs (T, C) or (B, T, C), got {x.shape}")
    _require(factor >= 1 and x.shape[-2] % factor == 0,
             f"time length {x.shape[-2]} not divisible by pooling factor {factor}")


def _pool_windows(x, factor):
    return x.reshape(x.shape[:-2] + (x.shape[-2] // factor, factor, x.shape[-1]))


def _max_pool_time(x, factor):
    windows = _pool_windows(x, factor)
    index = _first_argmax(windows, -2)
    return np.squeeze(np.take_along_axis(windows, index, axis=-2), axis=-2)


def _max_pool_time_vjp(g, out, x, factor):
    windows = _pool_windows(x, factor)
    index = _first_argmax(windows, -2)
    grad = np.zeros_like(windows)
    np.put_along_axis(grad, index, np.expand_dims(g, -2), axis=-2)
    return (grad.reshape(x.shape),)


register_primitive("max_pool_time", forward=_max_pool_time, vjp=_max_pool_time_vjp, check=_check_max_pool)


# -- public wrappers --------------------------------------------------------

def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("matmul", (a, b))


def affine(x: TensorLike, w: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("affine", (x, w, b))


def add(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("add", (a, b))


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("sub", (a, b))


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("mul", (a, b))


def mul_const(x: TensorLike, const: np.ndarray) -> Tensor:
    """Elementwise product with a constant array (masks, loss weights)."""
    return apply_primitive("mul_const", (x,), const=np.asarray(const, dtype=np.float64))


def scale(x: TensorLike, factor: float) -> Tensor:
    return apply_primitive("scale", (x,), factor=float(factor))


def sigmoid(x: TensorLike) -> Tensor:
    return apply_primitive("sigmoid", (x,))


def tanh(x: TensorLike) -> Tensor:
    return apply_primitive("tanh", (x,))


def relu(x: TensorLike) -> Tensor:
    return apply_primitive("relu", (x,))


def exp(x: TensorLike) -> Tensor:
    return apply_primitive("exp", (x,))


def softmax(x: TensorLike) -> Tensor:
    return apply_primitive("softmax", (x,))


def log_softmax(x: TensorLike) -> Tensor:
    return apply_primitive("log_softmax", (x,))


def log(x: TensorLike, floor: float = LOG_FLOOR) -> Tensor:
    return apply_primitive("log", (x,), floor=float(floor))


def log1m(x: TensorLike, floor: float = LOG_FLOOR) -> Tensor:
    """log(1 - x)."""
    return apply_primitive("log1m", (x,), floor=float(floor))


def neg_expm1(x: TensorLike) -> Tensor:
    """1 - exp(x) for x <= 0."""
    return apply_primitive("neg_expm1", (x,))


def log_neg_expm1(x: TensorLike, floor: float = LOG_FLOOR) -> Tensor:
    """log(1 - exp(x)) for x <= 0."""
    return apply_primitive("log_neg_expm1", (x,), floor=float(floor))


def sum_all(x: TensorLike) -> Tensor:
    return apply_primitive("sum", (x,))


def max_over_time(x: TensorLike) -> Tensor:
    return apply_primitive("max_over_time", (x,))


def sum_over_time(x: TensorLike) -> Tensor:
    return apply_primitive("sum_over_time", (x,))


def concat(tensors: Sequence[TensorLike], axis: int = -1) -> Tensor:
    return apply_primitive("concat", tuple(tensors), axis=axis)


def slice_time(x: TensorLike, start: int, stop: int) -> Tensor:
    return apply_primitive("slice_time", (x,), start=int(start), stop=int(stop))


def conv1d(x: TensorLike, w: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("conv1d", (x, w, b))


def max_pool_time(x: TensorLike, factor: int) -> Tensor:
    return apply_primitive("max_pool_time", (x,), factor=int(factor))


def add_all(terms: Sequence[Tensor]) -> Optional[Tensor]:
    """Left-to-right sum of equally shaped tensors (fixed order)."""
    total = None
    for term in terms:
        total = term if total is None else add(total, term)
    return total
