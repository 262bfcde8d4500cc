"""
Bag and dataset models.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterator, Optional, Tuple

import numpy as np

from .labels import EventInterval, LabelKind, TokenSequence, WeakLabel

SPLITS = ("train", "valid", "test")

# Intervals may end this far past the last frame before they count as outside.
DURATION_TOLERANCE = 1e-9


class MissingLabelError(ValueError):
    """A bag or dataset lacks the label kind an operation needs."""

    def __init__(self, kind: LabelKind, where: str = ""):
        self.kind = kind
        suffix = f" ({where})" if where else ""
        super().__init__(f"missing {kind.value} labels{suffix}")


@dataclass(frozen=True, eq=False)
class Bag:
    """
    One sequence: features plus whichever labels exist.

    When strong labels are present, weak and sequential labels are derived
    from them and cannot be supplied separately. Reduced-label corpora carry
    only ``stored_sequential`` or ``stored_weak``.
    """
    bag_id: str
    features: np.ndarray
    frame_rate: float
    strong: Optional[Tuple[EventInterval, ...]] = None
    stored_sequential: Optional[TokenSequence] = None
    stored_weak: Optional[WeakLabel] = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError(f"bag {self.bag_id}: features must be (T, F), got {features.shape}")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be > 0")

        if self.strong is not None:
            if self.stored_sequential is not None or self.stored_weak is not None:
                raise ValueError(f"bag {self.bag_id}: weak/sequential labels are derived from strong labels")
            strong = tuple(sorted(self.strong))
            for interval in strong:
                if interval.offset > self.duration + DURATION_TOLERANCE:
                    raise ValueError(
                        f"bag {self.bag_id}: interval {interval} ends after duration {self.duration}"
                    )
            object.__setattr__(self, "strong", strong)
        if self.stored_sequential is not None:
            object.__setattr__(self, "stored_sequential", tuple(int(t) for t in self.stored_sequential))

    @property
    def frames(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def duration(self) -> float:
        return self.frames / self.frame_rate

    @property
    def sequential(self) -> Optional[TokenSequence]:
        """Class ids in onset order."""
        if self.strong is not None:
            return tuple(interval.class_id for interval in self.strong)
        return self.stored_sequential

    @property
    def weak(self) -> Optional[WeakLabel]:
        """Classes present anywhere in the bag."""
        if self.strong is not None:
            return WeakLabel(frozenset(interval.class_id for interval in self.strong))
        if self.stored_sequential is not None:
            return WeakLabel(frozenset(self.stored_sequential))
        return self.stored_weak

    @property
    def label_kinds(self) -> FrozenSet[LabelKind]:
        kinds = set()
        if self.strong is not None:
            kinds.add(LabelKind.STRONG)
        if self.sequential is not None:
            kinds.add(LabelKind.SEQUENTIAL)
        if self.weak is not None:
            kinds.add(LabelKind.WEAK)
        return frozenset(kinds)

    def require(self, kind: LabelKind):
        """Labels of ``kind`` or MissingLabelError."""
        value = {
            LabelKind.STRONG: self.strong,
            LabelKind.SEQUENTIAL: self.sequential,
            LabelKind.WEAK: self.weak,
        }[kind]
        if value is None:
            raise MissingLabelError(kind, self.bag_id)
        return value


@dataclass(frozen=True, eq=False)
class Dataset:
    """Train/valid/test splits over a shared class inventory."""
    class_names: Tuple[str, ...]
    train: Tuple[Bag, ...]
    valid: Tuple[Bag, ...]
    test: Tuple[Bag, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        for name in SPLITS:
            object.__setattr__(self, name, tuple(getattr(self, name)))
        dims = {bag.feature_dim for bag in self.bags()}
        if len(dims) > 1:
            raise ValueError(f"bags disagree on feature dimension: {sorted(dims)}")
        rates = {bag.frame_rate for bag in self.bags()}
        if len(rates) > 1:
            raise ValueError(f"bags disagree on frame rate: {sorted(rates)}")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_dim(self) -> int:
        return next(self.bags()).feature_dim

    @property
    def frame_rate(self) -> float:
        return next(self.bags()).frame_rate

    def split(self, name: str) -> Tuple[Bag, ...]:
        if name not in SPLITS:
            raise ValueError(f"unknown split '{name}', expected one of {SPLITS}")
        return getattr(self, name)

    def bags(self) -> Iterator[Bag]:
        for name in SPLITS:
            yield from getattr(self, name)

    @property
    def label_kinds(self) -> FrozenSet[LabelKind]:
        """Label kinds available on every bag."""
        kinds = None
        for bag in self.bags():
            kinds = bag.label_kinds if kinds is None else kinds & bag.label_kinds
        return frozenset() if kinds is None else kinds

    def require(self, kind: LabelKind, splits: Tuple[str, ...] = SPLITS) -> None:
        for name in splits:
            for bag in self.split(name):
                bag.require(kind)

    def find(self, bag_id: str) -> Bag:
        for bag in self.bags():
            if bag.bag_id == bag_id:
                return bag
        raise KeyError(f"no bag with id '{bag_id}'")
