"""
Dense float64 arrays with tape-based reverse-mode differentiation.

Every primitive application goes through ``apply_primitive``. When a ``Tape``
is active (``with Tape() as tape:``) the application is recorded as a
``TapeNode``; ``Tape.backward`` then walks the nodes once, newest first, and
accumulates vector-Jacobian products into the named parameters.

Tensors are immutable: the wrapped array is read-only, so a tensor can be
shared across threads. A tape is owned by the thread that opened it.
"""

import logging
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AutodiffError, NonFiniteError, ShapeError, TapeConsumedError

logger = logging.getLogger(__name__)

ForwardFn = Callable[..., np.ndarray]
VjpFn = Callable[..., Tuple[Optional[np.ndarray], ...]]
CheckFn = Callable[..., None]


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Tensor:
    """Immutable float64 array, optionally produced by a recorded primitive."""

    __slots__ = ("value", "name")

    def __init__(self, value: Any, name: Optional[str] = None):
        # Copy so later mutation of the caller's array cannot leak in.
        self.value = _freeze(np.array(value, dtype=np.float64))
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        tensor = cls.__new__(cls)
        array = np.asarray(array, dtype=np.float64)
        if not array.flags.c_contiguous:
            array = np.ascontiguousarray(array)
        tensor.value = _freeze(array)
        tensor.name = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return int(self.value.size)

    def item(self) -> float:
        if self.value.size != 1:
            raise ShapeError(f"item() needs a single value, shape is {self.shape}")
        return float(self.value.reshape(()))

    def numpy(self) -> np.ndarray:
        """Writable copy of the value."""
        return np.array(self.value)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"


TensorLike = Union[Tensor, np.ndarray, float, int, Sequence[float]]


@dataclass(frozen=True)
class Primitive:
    """Forward rule plus vector-Jacobian product for one primitive kind.

    ``forward(*values, **attrs)`` returns the output array.
    ``vjp(grad, out, *values, **attrs)`` returns one gradient (or None) per input.
    ``check(*values, **attrs)`` raises ShapeError on nonconforming inputs.
    """
    kind: str
    forward: ForwardFn
    vjp: Optional[VjpFn] = None
    check: Optional[CheckFn] = None


_REGISTRY: Dict[str, Primitive] = {}


def register_primitive(
    kind: str,
    forward: ForwardFn,
    vjp: Optional[VjpFn] = None,
    check: Optional[CheckFn] = None,
) -> Primitive:
    """Register a primitive under ``kind``; re-registration is an error."""
    if kind in _REGISTRY:
        raise AutodiffError(f"primitive '{kind}' already registered")
    primitive = Primitive(kind=kind, forward=forward, vjp=vjp, check=check)
    _REGISTRY[kind] = primitive
    return primitive


def get_primitive(kind: str) -> Primitive:
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise AutodiffError(f"unknown primitive '{kind}'") from None


def registered_primitives() -> List[str]:
    return sorted(_REGISTRY)


@dataclass
class TapeNode:
    """One recorded primitive application. Gradients are recomputed from inputs."""
    primitive: Primitive
    inputs: Tuple[Tensor, ...]
    output: Tensor
    attrs: Dict[str, Any] = field(default_factory=dict)


_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("milseq_active_tape", default=None)


class Tape:
    """Recording context for one forward pass; consumed by a single backward."""

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.consumed = False
        self._token = None

    def __enter__(self) -> "Tape":
        if self.consumed:
            raise TapeConsumedError("cannot record on a consumed tape")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def backward(self, output: Tensor, parameters: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
        """
        Gradients of a scalar ``output`` w.r.t. every named parameter.

        Args:
            output: Scalar tensor produced while this tape was recording
            parameters: Name -> leaf tensor used in the forward pass

        Returns:
            Name -> gradient array (zeros for parameters the output does not reach)

        Raises:
            ShapeError: If output is not a scalar
            TapeConsumedError: If backward already ran on this tape
        """
        if self.consumed:
            raise TapeConsumedError("tape already consumed by a previous backward()")
        if output.size != 1:
            raise ShapeError(f"backward() needs a scalar output, got shape {output.shape}")

        grads: Dict[int, np.ndarray] = {id(output): np.ones_like(output.value)}

        # Nodes were appended in execution order, which is a topological order.
        for node in reversed(self.nodes):
            grad_out = grads.get(id(node.output))
            if grad_out is None or node.primitive.vjp is None:
                continue
            values = [t.value for t in node.inputs]
            with np.errstate(all="ignore"):
                input_grads = node.primitive.vjp(grad_out, node.output.value, *values, **node.attrs)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None:
                    continue
                if grad.shape != tensor.shape:
                    raise ShapeError(
                        f"vjp of '{node.primitive.kind}' returned shape {grad.shape} "
                        f"for input of shape {tensor.shape}"
                    )
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad

        self.consumed = True
        result = {}
        for name, tensor in parameters.items():
            grad = grads.get(id(tensor))
            result[name] = np.zeros_like(tensor.value) if grad is None else np.array(grad, dtype=np.float64)
        self.nodes = []

        logger.debug("tape_backward", extra={"parameters": len(result)})
        return result


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def as_tensor(value: TensorLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def apply_primitive(kind: str, inputs: Sequence[TensorLike], **attrs: Any) -> Tensor:
    """
    Evaluate a registered primitive and record it on the active tape.

    Args:
        kind: Registered primitive id (e.g. 'sigmoid', 'affine')
        inputs: Input tensors (arrays are wrapped as constants)
        **attrs: Non-differentiable attributes of the primitive

    Returns:
        Output tensor

    Raises:
        ShapeError: If inputs do not conform to the primitive's signature
        NonFiniteError: If the output contains NaN or Inf
    """
    primitive = get_primitive(kind)
    tensors = tuple(as_tensor(t) for t in inputs)
    values = [t.value for t in tensors]

    if primitive.check is not None:
        primitive.check(*values, **attrs)

    with np.errstate(all="ignore"):
        out = np.asarray(primitive.forward(*values, **attrs), dtype=np.float64)

    if not np.all(np.isfinite(out)):
        raise NonFiniteError(kind, f"output shape {out.shape}")

    result = Tensor._wrap(out)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        tape.record(TapeNode(primitive=primitive, inputs=tensors, output=result, attrs=dict(attrs)))
    return result


def backward(tape: Tape, output: Tensor, parameters: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    """Functional form of ``Tape.backward``."""
    return tape.backward(output, parameters)
