"""Errors raised by the objectives."""


class EmptyBagError(ValueError):
    """Pooling over a bag with no frames."""


class CTCLabelTooLongError(ValueError):
    """No alignment of the label fits in the available frames (infinite loss)."""

    def __init__(self, label_length: int, required_frames: int, frames: int):
        self.label_length = label_length
        self.required_frames = required_frames
        self.frames = frames
        super().__init__(
            f"label of length {label_length} needs at least {required_frames} frames, got {frames}"
        )
