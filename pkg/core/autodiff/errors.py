"""Errors raised by the tensor core."""


class AutodiffError(Exception):
    """Base class for tensor core failures."""


class ShapeError(AutodiffError, ValueError):
    """Input shapes do not conform to a primitive's signature."""


class NonFiniteError(AutodiffError, ArithmeticError):
    """A primitive produced NaN or Inf."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        message = f"primitive '{kind}' produced a non-finite value"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class TapeConsumedError(AutodiffError, RuntimeError):
    """backward() was called twice on the same tape."""
