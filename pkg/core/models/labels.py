"""
Label models: presence/absence, sequential and strong labels.
"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, Tuple

import numpy as np

# Ordered class ids with no blank symbol.
TokenSequence = Tuple[int, ...]


class LabelKind(Enum):
    """Labeling levels, from most to least informative."""
    STRONG = "strong"
    SEQUENTIAL = "sequential"
    WEAK = "weak"


@dataclass(frozen=True)
class WeakLabel:
    """Set of classes present in a bag."""
    present: FrozenSet[int] = frozenset()

    def __post_init__(self):
        present = frozenset(int(c) for c in self.present)
        if any(c < 0 for c in present):
            raise ValueError(f"class ids must be >= 0, got {sorted(present)}")
        object.__setattr__(self, "present", present)

    @classmethod
    def from_classes(cls, classes: Iterable[int]) -> "WeakLabel":
        return cls(frozenset(classes))

    def __contains__(self, class_id: int) -> bool:
        return class_id in self.present

    def __len__(self) -> int:
        return len(self.present)

    def validate(self, num_classes: int) -> None:
        """Raise ValueError unless every class id is below ``num_classes``."""
        outside = [c for c in self.present if c >= num_classes]
        if outside:
            raise ValueError(f"class ids {sorted(outside)} outside 0..{num_classes - 1}")

    def as_vector(self, num_classes: int) -> np.ndarray:
        """0/1 float vector of length ``num_classes``."""
        self.validate(num_classes)
        vector = np.zeros(num_classes)
        vector[sorted(self.present)] = 1.0
        return vector

    def sorted_classes(self) -> Tuple[int, ...]:
        return tuple(sorted(self.present))


@dataclass(frozen=True, order=True)
class EventInterval:
    """
    One sound event or phone occurrence.

    Field order makes the natural sort (onset, offset, class) the timeline order.
    """
    onset: float
    offset: float
    class_id: int

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if not 0.0 <= self.onset < self.offset:
            raise ValueError(f"interval needs 0 <= onset < offset, got [{self.onset}, {self.offset})")

    @property
    def duration(self) -> float:
        return self.offset - self.onset

    def overlaps(self, start: float, end: float) -> bool:
        """True iff the interval shares positive time with [start, end)."""
        return self.onset < end and self.offset > start
