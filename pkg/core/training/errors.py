"""Errors raised by the training loop."""

from typing import Optional


class DivergenceError(ArithmeticError):
    """A loss or gradient became non-finite; training stops at the offending batch."""

    def __init__(self, epoch: int, batch_id: int, detail: str = "", value: Optional[float] = None):
        self.epoch = epoch
        self.batch_id = batch_id
        self.value = value
        message = f"training diverged in epoch {epoch}, batch {batch_id}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
