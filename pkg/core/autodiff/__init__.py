"""
Tensor core: float64 arrays, primitives and tape-based reverse mode.
"""

from .errors import AutodiffError, NonFiniteError, ShapeError, TapeConsumedError
from .tensor import Tape, TapeNode, Tensor, apply_primitive, as_tensor, backward, register_primitive
from . import primitives
from . import recurrent
from .recurrent import gru

__all__ = [
    "AutodiffError",
    "NonFiniteError",
    "ShapeError",
    "TapeConsumedError",
    "Tape",
    "TapeNode",
    "Tensor",
    "apply_primitive",
    "as_tensor",
    "backward",
    "register_primitive",
    "primitives",
    "recurrent",
    "gru",
]
