"""
Fused gated recurrent layer.

Gate layout along the 3H axis is [update | reset | candidate]:

    z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
    r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
    n_t = tanh(x_t Wn + (r_t * h_{t-1}) Un + bn)
    h_t = (1 - z_t) * n_t + z_t * h_{t-1},   h_{-1} = 0

With ``reverse=True`` the layer reads the sequence from the last frame to the
first and returns states aligned with the input frames. The backward pass
recomputes the gates from the inputs instead of caching them on the tape.
"""

from typing import Dict

import numpy as np

from .errors import ShapeError
from .numerics import stable_sigmoid
from .tensor import Tensor, TensorLike, apply_primitive, register_primitive


def _check_gru(x, wx, wh, b, reverse=False):
    if x.ndim not in (2, 3):
        raise ShapeError(f"gru input must be (T, I) or (B, T, I), got {x.shape}")
    hidden = wh.shape[0]
    if wh.shape != (hidden, 3 * hidden):
        raise ShapeError(f"gru recurrent weight must be (H, 3H), got {wh.shape}")
    if wx.shape != (x.shape[-1], 3 * hidden):
        raise ShapeError(f"gru input weight {wx.shape} does not fit input {x.shape} and H={hidden}")
    if b.shape != (3 * hidden,):
        raise ShapeError(f"gru bias must be (3H,), got {b.shape}")


def _batched(x: np.ndarray, reverse: bool) -> np.ndarray:
    x3 = x[None] if x.ndim == 2 else x
    return x3[:, ::-1, :] if reverse else x3


def _unbatch(y: np.ndarray, like: np.ndarray, reverse: bool) -> np.ndarray:
    y = y[:, ::-1, :] if reverse else y
    return y[0] if like.ndim == 2 else y


def _run(x3: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray) -> Dict[str, np.ndarray]:
    batch, frames, _ = x3.shape
    hidden = wh.shape[0]
    projected = x3 @ wx + b
    u_zr = wh[:, :2 * hidden]
    u_n = wh[:, 2 * hidden:]

    states = np.empty((batch, frames, hidden))
    cache = {name: np.empty((batch, frames, hidden)) for name in ("z", "r", "n", "h_prev")}
    h = np.zeros((batch, hidden))
    for t in range(frames):
        a = projected[:, t, :]
        recur = h @ u_zr
        z = stable_sigmoid(a[:, :hidden] + recur[:, :hidden])
        r = stable_sigmoid(a[:, hidden:2 * hidden] + recur[:, hidden:])
        n = np.tanh(a[:, 2 * hidden:] + (r * h) @ u_n)
        cache["z"][:, t] = z
        cache["r"][:, t] = r
        cache["n"][:, t] = n
        cache["h_prev"][:, t] = h
        h = (1.0 - z) * n + z * h
        states[:, t] = h
    cache["states"] = states
    return cache


def _gru_forward(x, wx, wh, b, reverse=False):
    cache = _run(_batched(x, reverse), wx, wh, b)
    return _unbatch(cache["states"], x, reverse)


def _gru_vjp(g, out, x, wx, wh, b, reverse=False):
    x3 = _batched(x, reverse)
    g3 = _batched(g, reverse)
    cache = _run(x3, wx, wh, b)
    batch, frames, inputs = x3.shape
    hidden = wh.shape[0]
    u_z = wh[:, :hidden]
    u_r = wh[:, hidden:2 * hidden]
    u_n = wh[:, 2 * hidden:]

    grad_pre = np.zeros((batch, frames, 3 * hidden))
    grad_wh = np.zeros_like(wh)
    dh_next = np.zeros((batch, hidden))
    for t in range(frames - 1, -1, -1):
        z = cache["z"][:, t]
        r = cache["r"][:, t]
        n = cache["n"][:, t]
        h_prev = cache["h_prev"][:, t]

        dh = g3[:, t] + dh_next
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z

        da_n = dn * (1.0 - n * n)
        da_z = dz * z * (1.0 - z)
        d_rh = da_n @ u_n.T
        da_r = d_rh * h_prev * r * (1.0 - r)
        dh_prev = dh_prev + d_rh * r + da_z @ u_z.T + da_r @ u_r.T

        grad_wh[:, :hidden] += h_prev.T @ da_z
        grad_wh[:, hidden:2 * hidden] += h_prev.T @ da_r
        grad_wh[:, 2 * hidden:] += (r * h_prev).T @ da_n
        grad_pre[:, t, :hidden] = da_z
        grad_pre[:, t, hidden:2 * hidden] = da_r
        grad_pre[:, t, 2 * hidden:] = da_n
        dh_next = dh_prev

    flat_pre = grad_pre.reshape(-1, 3 * hidden)
    grad_wx = x3.reshape(-1, inputs).T @ flat_pre
    grad_b = flat_pre.sum(axis=0)
    grad_x = _unbatch(grad_pre @ wx.T, x, reverse)
    return grad_x, grad_wx, grad_wh, grad_b


register_primitive("gru", forward=_gru_forward, vjp=_gru_vjp, check=_check_gru)


def gru(x: TensorLike, wx: TensorLike, wh: TensorLike, b: TensorLike, reverse: bool = False) -> Tensor:
    """Run a gated recurrent layer over the time axis of (T, I) or (B, T, I) input."""
    return apply_primitive("gru", (x, wx, wh, b), reverse=bool(reverse))
