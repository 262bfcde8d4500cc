"""
Synthetic weakly labeled sequence corpus.

Each class owns a fixed signature direction: the rows of an orthonormal
basis (QR of a seeded Gaussian matrix) scaled by ``amplitude``. A bag is
Gaussian noise of standard deviation ``noise_std``; every event adds its
class signature over its frames. The background is the zero vector plus noise.

Event count per bag is uniform on ``events_per_bag``, classes are drawn
uniformly and independently, durations uniformly on ``event_duration``
(frames). With overlap allowed, each start is uniform over the frames that
fit the event. Without overlap, the events keep their drawn order and the
free frames are split into random gaps around them.

Seeds: signatures come from the 'data/signatures' stream and each split
spawns one child SeedSequence per bag from its own 'data/<split>' stream,
so a split never depends on another split's contents.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.models.bag import SPLITS, Bag, Dataset
from core.models.config import ConfigHash, SynthConfig, to_plain_dict
from core.models.labels import EventInterval
from core.utils.seeding import derive_rng, derive_seed_sequence

logger = logging.getLogger(__name__)


class InfeasibleConfigError(ValueError):
    """Requested events cannot be placed in a bag without overlapping."""


def default_class_names(num_classes: int) -> Tuple[str, ...]:
    return tuple(f"event_{c:02d}" for c in range(num_classes))


def class_signatures(config: SynthConfig) -> np.ndarray:
    """(C, F) mutually orthogonal rows of norm ``amplitude``."""
    rng = derive_rng(config.seed, "data/signatures")
    basis, _ = np.linalg.qr(rng.standard_normal((config.feature_dim, config.num_classes)))
    return config.amplitude * basis.T


def check_feasible(config: SynthConfig) -> None:
    """Without overlap, the largest draw (most events, longest durations) must fit in one bag."""
    if config.allow_overlap:
        return
    worst = config.events_per_bag[1] * config.event_duration[1]
    if worst > config.frames_per_bag:
        raise InfeasibleConfigError(
            f"{config.events_per_bag[1]} events of up to {config.event_duration[1]} frames "
            f"cannot be placed without overlap in {config.frames_per_bag} frames"
        )


def _place_events(config: SynthConfig, durations: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    frames = config.frames_per_bag
    if config.allow_overlap:
        return np.array([rng.integers(0, frames - d + 1) for d in durations], dtype=np.int64)
    free = frames - int(durations.sum())
    cuts = np.sort(rng.integers(0, free + 1, size=len(durations)))
    gaps = np.diff(np.concatenate([[0], cuts]))
    starts = np.cumsum(gaps) + np.concatenate([[0], np.cumsum(durations)[:-1]])
    return starts.astype(np.int64)


def generate_bag(
    config: SynthConfig,
    signatures: np.ndarray,
    bag_id: str,
    rng: np.random.Generator,
) -> Bag:
    low, high = config.events_per_bag
    count = int(rng.integers(low, high + 1))
    classes = rng.integers(0, config.num_classes, size=count)
    durations = rng.integers(config.event_duration[0], config.event_duration[1] + 1, size=count)
    starts = _place_events(config, durations, rng)

    features = config.noise_std * rng.standard_normal((config.frames_per_bag, config.feature_dim))
    intervals = []
    for class_id, start, duration in zip(classes.tolist(), starts.tolist(), durations.tolist()):
        features[start:start + duration] += signatures[class_id]
        intervals.append(EventInterval(
            onset=start / config.frame_rate,
            offset=(start + duration) / config.frame_rate,
            class_id=class_id,
        ))
    return Bag(bag_id=bag_id, features=features, frame_rate=config.frame_rate, strong=tuple(intervals))


def generate_split(config: SynthConfig, split: str, count: int, signatures: np.ndarray) -> List[Bag]:
    children = derive_seed_sequence(config.seed, f"data/{split}").spawn(count)
    return [
        generate_bag(config, signatures, f"{split}_{i:05d}", np.random.default_rng(child))
        for i, child in enumerate(children)
    ]


def generate(config: SynthConfig, class_names: Optional[Sequence[str]] = None) -> Dataset:
    """
    Generate train/valid/test splits.

    Raises:
        InfeasibleConfigError: If events cannot be placed without overlap
    """
    check_feasible(config)
    names = tuple(class_names) if class_names is not None else default_class_names(config.num_classes)
    if len(names) != config.num_classes:
        raise ValueError(f"{len(names)} class names for {config.num_classes} classes")

    signatures = class_signatures(config)
    counts = dict(zip(SPLITS, (config.train_bags, config.valid_bags, config.test_bags)))
    splits = {name: generate_split(config, name, counts[name], signatures) for name in SPLITS}

    fingerprint = ConfigHash.of(config).hash_value
    logger.info("synthetic_data_generated", extra={
        "seed": config.seed,
        "train": len(splits["train"]),
        "valid": len(splits["valid"]),
        "test": len(splits["test"]),
        "fingerprint": fingerprint,
    })
    return Dataset(
        class_names=names,
        train=tuple(splits["train"]),
        valid=tuple(splits["valid"]),
        test=tuple(splits["test"]),
        metadata={"synth": to_plain_dict(config), "fingerprint": fingerprint},
    )
