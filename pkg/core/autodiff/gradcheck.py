"""Finite-difference gradient checking."""

from typing import Callable, List, Sequence

import numpy as np

from .tensor import Tape, Tensor

DEFAULT_STEP = 1e-4
DENOMINATOR_GUARD = 1e-8


def relative_error(analytic: np.ndarray, numeric: np.ndarray, guard: float = DENOMINATOR_GUARD) -> float:
    """||a - n|| / max(||a|| + ||n||, guard)."""
    diff = np.linalg.norm(np.ravel(analytic) - np.ravel(numeric))
    scale = np.linalg.norm(np.ravel(analytic)) + np.linalg.norm(np.ravel(numeric))
    return float(diff / max(scale, guard))


def numerical_gradient(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    index: int,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Central differences of scalar ``fn(*arrays)`` w.r.t. ``arrays[index]``."""
    work: List[np.ndarray] = [np.array(a, dtype=np.float64) for a in arrays]
    target = work[index]
    grad = np.zeros_like(target)
    flat_target = target.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat_target.size):
        original = flat_target[i]
        flat_target[i] = original + step
        upper = fn(*[Tensor(a) for a in work]).item()
        flat_target[i] = original - step
        lower = fn(*[Tensor(a) for a in work]).item()
        flat_target[i] = original
        flat_grad[i] = (upper - lower) / (2.0 * step)
    return grad


def analytic_gradients(fn: Callable[..., Tensor], arrays: Sequence[np.ndarray]) -> List[np.ndarray]:
    params = {f"arg{i}": Tensor(a) for i, a in enumerate(arrays)}
    with Tape() as tape:
        output = fn(*params.values())
    grads = tape.backward(output, params)
    return [grads[f"arg{i}"] for i in range(len(arrays))]


def check_gradients(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    step: float = DEFAULT_STEP,
    wrt: Sequence[int] = None,
) -> float:
    """
    Largest relative error between analytic and central-difference gradients.

    Args:
        fn: Scalar-valued function of tensors
        arrays: Evaluation point, one array per argument
        step: Finite-difference step
        wrt: Argument indices to check (default: all)

    Returns:
        Maximum relative error over the checked arguments
    """
    analytic = analytic_gradients(fn, arrays)
    indices = range(len(arrays)) if wrt is None else wrt
    worst = 0.0
    for i in indices:
        numeric = numerical_gradient(fn, arrays, i, step)
        worst = max(worst, relative_error(analytic[i], numeric))
    return worst
