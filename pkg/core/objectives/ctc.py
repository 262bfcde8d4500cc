"""
Connectionist temporal classification loss.

The label is extended with blanks, ``[b, l1, b, l2, ..., lL, b]``, and the
forward (alpha) and backward (beta) variables are computed in log space.
Here beta[t, s] excludes the emission at frame t, so

    alpha[t, s] + beta[t, s] = log p(paths through state s at frame t, label)

and the gradient of the negative log-likelihood w.r.t. log_probs[t, k] is
minus the posterior mass of all states s at frame t whose symbol is k.
"""

import logging
from typing import Sequence, Tuple, Union

import numpy as np

from core.autodiff.errors import ShapeError
from core.autodiff.tensor import Tensor, TensorLike, apply_primitive, register_primitive

from .errors import CTCLabelTooLongError

logger = logging.getLogger(__name__)

NEG_INF = -np.inf

Label = Tuple[int, ...]


def required_frames(label: Sequence[int]) -> int:
    """Shortest input that can emit ``label``: one frame per token plus a blank between repeats."""
    repeats = sum(1 for a, b in zip(label, label[1:]) if a == b)
    return len(label) + repeats


def _extend(label: Sequence[int], blank: int) -> np.ndarray:
    extended = np.full(2 * len(label) + 1, blank, dtype=np.int64)
    extended[1::2] = label
    return extended


def _skip_allowed(extended: np.ndarray, blank: int) -> np.ndarray:
    """skip[s]: state s may be entered from s - 2."""
    skip = np.zeros(extended.size, dtype=bool)
    skip[2:] = (extended[2:] != blank) & (extended[2:] != extended[:-2])
    return skip


def _alpha(log_probs: np.ndarray, extended: np.ndarray, skip: np.ndarray) -> np.ndarray:
    frames = log_probs.shape[0]
    states = extended.size
    emit = log_probs[:, extended]
    alpha = np.full((frames, states), NEG_INF)
    alpha[0, 0] = emit[0, 0]
    if states > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, frames):
        prev = alpha[t - 1]
        total = prev.copy()
        total[1:] = np.logaddexp(total[1:], prev[:-1])
        total[2:] = np.where(skip[2:], np.logaddexp(total[2:], prev[:-2]), total[2:])
        alpha[t] = total + emit[t]
    return alpha


def _beta(log_probs: np.ndarray, extended: np.ndarray, skip: np.ndarray) -> np.ndarray:
    frames = log_probs.shape[0]
    states = extended.size
    emit = log_probs[:, extended]
    beta = np.full((frames, states), NEG_INF)
    beta[-1, -1] = 0.0
    if states > 1:
        beta[-1, -2] = 0.0
    for t in range(frames - 2, -1, -1):
        nxt = beta[t + 1] + emit[t + 1]
        total = nxt.copy()
        total[:-1] = np.logaddexp(total[:-1], nxt[1:])
        total[:-2] = np.where(skip[2:], np.logaddexp(total[:-2], nxt[2:]), total[:-2])
        beta[t] = total
    return beta


def _log_likelihood(alpha: np.ndarray) -> float:
    last = alpha[-1]
    return float(np.logaddexp(last[-1], last[-2])) if last.size > 1 else float(last[-1])


def _nll_single(log_probs: np.ndarray, label: Label, blank: int) -> float:
    extended = _extend(label, blank)
    return -_log_likelihood(_alpha(log_probs, extended, _skip_allowed(extended, blank)))


def _grad_single(log_probs: np.ndarray, label: Label, blank: int) -> np.ndarray:
    extended = _extend(label, blank)
    skip = _skip_allowed(extended, blank)
    alpha = _alpha(log_probs, extended, skip)
    beta = _beta(log_probs, extended, skip)
    log_likelihood = _log_likelihood(alpha)
    posterior = np.exp(alpha + beta - log_likelihood)
    grad = np.zeros_like(log_probs)
    for s, symbol in enumerate(extended):
        grad[:, symbol] -= posterior[:, s]
    return grad


def _labels_for(log_probs: np.ndarray, labels) -> Tuple[Label, ...]:
    return (tuple(labels),) if log_probs.ndim == 2 else tuple(tuple(l) for l in labels)


def _check_ctc(log_probs, labels, blank):
    if log_probs.ndim not in (2, 3):
        raise ShapeError(f"ctc input must be (T, K) or (B, T, K), got {log_probs.shape}")
    frames, symbols = log_probs.shape[-2], log_probs.shape[-1]
    if frames == 0:
        raise ShapeError("ctc input has no frames")
    if not 0 <= blank < symbols:
        raise ShapeError(f"blank index {blank} outside {symbols} symbols")
    per_bag = _labels_for(log_probs, labels)
    if log_probs.ndim == 3 and len(per_bag) != log_probs.shape[0]:
        raise ShapeError(f"{len(per_bag)} labels for a batch of {log_probs.shape[0]}")
    for label in per_bag:
        if any(not 0 <= token < symbols or token == blank for token in label):
            raise ValueError(f"label {label} has ids outside the non-blank symbols")
        needed = required_frames(label)
        if frames < needed:
            logger.warning("ctc_label_too_long", extra={
                "label_length": len(label), "required_frames": needed, "frames": frames,
            })
            raise CTCLabelTooLongError(len(label), needed, frames)


def _ctc_forward(log_probs, labels, blank):
    per_bag = _labels_for(log_probs, labels)
    if log_probs.ndim == 2:
        return np.asarray(_nll_single(log_probs, per_bag[0], blank))
    return np.array([_nll_single(lp, label, blank) for lp, label in zip(log_probs, per_bag)])


def _ctc_vjp(g, out, log_probs, labels, blank):
    per_bag = _labels_for(log_probs, labels)
    if log_probs.ndim == 2:
        return (g.item() * _grad_single(log_probs, per_bag[0], blank),)
    grads = np.stack([_grad_single(lp, label, blank) for lp, label in zip(log_probs, per_bag)])
    return (grads * g[:, None, None],)


register_primitive("ctc", forward=_ctc_forward, vjp=_ctc_vjp, check=_check_ctc)


def ctc_nll(log_probs: TensorLike, labels, blank: int) -> Tensor:
    """Per-bag NLLs for (B, T', K) input, or a scalar for (T', K)."""
    if np.ndim(getattr(log_probs, "value", log_probs)) == 2:
        labels = tuple(int(t) for t in labels)
    else:
        labels = tuple(tuple(int(t) for t in label) for label in labels)
    return apply_primitive("ctc", (log_probs,), labels=labels, blank=int(blank))


def ctc_loss(log_probs: Union[TensorLike, np.ndarray], label: Sequence[int], blank: int = None) -> Tensor:
    """
    Negative log-likelihood of ``label`` under per-frame log-softmax outputs.

    Args:
        log_probs: (T', C + 1) log-probabilities
        label: Class ids in {0..C-1}
        blank: Blank column (default: last column)

    Returns:
        Scalar tensor; differentiable when a tape is recording

    Raises:
        CTCLabelTooLongError: If T' is shorter than the label needs
    """
    symbols = np.shape(getattr(log_probs, "value", log_probs))[-1]
    return ctc_nll(log_probs, label, symbols - 1 if blank is None else blank)
