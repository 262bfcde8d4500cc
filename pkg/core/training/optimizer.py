"""
SGD with Nesterov momentum and element-wise gradient clipping.

Update rule, with the gradient taken at the lookahead point theta + mu * v:

    v'     = mu * v - lr * grad L(theta + mu * v)
    theta' = theta + v'
"""

from typing import Dict, Mapping, Tuple

import numpy as np

ArrayMap = Dict[str, np.ndarray]


def clip_gradients(grads: Mapping[str, np.ndarray], limit: float) -> Tuple[ArrayMap, int]:
    """
    Clip every gradient element into [-limit, +limit].

    Returns:
        (clipped gradients, number of elements that were outside the bound)
    """
    if not limit > 0.0:
        raise ValueError(f"clip limit must be > 0, got {limit}")
    clipped: ArrayMap = {}
    count = 0
    for name, grad in grads.items():
        count += int(np.count_nonzero(np.abs(grad) > limit))
        clipped[name] = np.clip(grad, -limit, limit)
    return clipped, count


def lookahead(params: Mapping[str, np.ndarray], velocity: Mapping[str, np.ndarray], momentum: float) -> ArrayMap:
    """Point theta + mu * v where the next gradient is evaluated."""
    return {name: params[name] + momentum * velocity[name] for name in params}


def sgd_nesterov_step(
    params: Mapping[str, np.ndarray],
    velocity: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
    momentum: float,
) -> Tuple[ArrayMap, ArrayMap]:
    """
    One Nesterov step.

    Args:
        params: Current parameters theta
        velocity: Current velocity v
        grads: Gradient evaluated at ``lookahead(params, velocity, momentum)``
        lr: Learning rate
        momentum: mu in [0, 1)

    Returns:
        (new parameters, new velocity)

    Raises:
        FloatingPointError: If any gradient element is NaN or Inf
        ValueError: If shapes disagree
    """
    new_params: ArrayMap = {}
    new_velocity: ArrayMap = {}
    for name, theta in params.items():
        grad = grads[name]
        if np.shape(grad) != np.shape(theta) or np.shape(velocity[name]) != np.shape(theta):
            raise ValueError(f"shape mismatch for parameter {name}")
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"non-finite gradient for parameter {name}")
        v = momentum * velocity[name] - lr * grad
        new_velocity[name] = v
        new_params[name] = theta + v
    return new_params, new_velocity
