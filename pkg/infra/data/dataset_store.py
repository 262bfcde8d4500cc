"""
On-disk dataset layout.

    <dir>/manifest.json            class names, frame rate, label kinds, split ids, metadata
    <dir>/features/<bag_id>.npy    (T, F) float64 features, NumPy binary format
    <dir>/strong_labels.tsv        when every bag has strong labels
    <dir>/sequential_labels.tsv    when sequential labels are the richest kind
    <dir>/weak_labels.tsv          when weak labels are the only kind

Only the richest label kind is written; the others are derived on load.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from core.decoding.label_io import (
    read_intervals,
    read_sequences,
    read_tags,
    write_intervals,
    write_sequences,
    write_tags,
)
from core.models.bag import SPLITS, Bag, Dataset, MissingLabelError
from core.models.labels import LabelKind

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FORMAT_NAME = "milseq-dataset"
FORMAT_VERSION = 1

LABEL_FILES = {
    LabelKind.STRONG: "strong_labels.tsv",
    LabelKind.SEQUENTIAL: "sequential_labels.tsv",
    LabelKind.WEAK: "weak_labels.tsv",
}

PathLike = Union[str, Path]


def richest_kind(dataset: Dataset) -> LabelKind:
    kinds = dataset.label_kinds
    for kind in (LabelKind.STRONG, LabelKind.SEQUENTIAL, LabelKind.WEAK):
        if kind in kinds:
            return kind
    raise MissingLabelError(LabelKind.WEAK, "dataset has no label kind shared by every bag")


def strip_labels(dataset: Dataset, kind: LabelKind) -> Dataset:
    """Copy of ``dataset`` keeping only labels of ``kind`` (and what derives from it)."""
    def strip(bag: Bag) -> Bag:
        if kind == LabelKind.STRONG:
            return Bag(bag.bag_id, bag.features, bag.frame_rate, strong=bag.require(kind))
        if kind == LabelKind.SEQUENTIAL:
            return Bag(bag.bag_id, bag.features, bag.frame_rate, stored_sequential=bag.require(kind))
        return Bag(bag.bag_id, bag.features, bag.frame_rate, stored_weak=bag.require(kind))

    return Dataset(
        class_names=dataset.class_names,
        train=tuple(strip(b) for b in dataset.train),
        valid=tuple(strip(b) for b in dataset.valid),
        test=tuple(strip(b) for b in dataset.test),
        metadata={**dataset.metadata, "labels": kind.value},
    )


def save_dataset(dataset: Dataset, directory: PathLike) -> Path:
    """Write ``dataset`` under ``directory``; returns the manifest path."""
    directory = Path(directory)
    feature_dir = directory / "features"
    feature_dir.mkdir(parents=True, exist_ok=True)
    kind = richest_kind(dataset)

    for bag in dataset.bags():
        np.save(feature_dir / f"{bag.bag_id}.npy", bag.features)

    label_path = directory / LABEL_FILES[kind]
    if kind == LabelKind.STRONG:
        rows = [(bag.bag_id, interval) for bag in dataset.bags() for interval in bag.strong]
        write_intervals(rows, dataset.class_names, label_path)
    elif kind == LabelKind.SEQUENTIAL:
        write_sequences([(bag.bag_id, bag.sequential) for bag in dataset.bags()], dataset.class_names, label_path)
    else:
        write_tags([(bag.bag_id, bag.weak) for bag in dataset.bags()], dataset.class_names, label_path)

    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "class_names": list(dataset.class_names),
        "frame_rate": dataset.frame_rate,
        "feature_dim": dataset.feature_dim,
        "labels": kind.value,
        "splits": {name: [bag.bag_id for bag in dataset.split(name)] for name in SPLITS},
        "metadata": dataset.metadata,
    }
    manifest_path = directory / MANIFEST
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    logger.info("dataset_saved", extra={"path": str(directory), "labels": kind.value,
                                        "bags": sum(1 for _ in dataset.bags())})
    return manifest_path


def _read_manifest(directory: Path) -> Dict:
    path = directory / MANIFEST
    if not path.exists():
        raise FileNotFoundError(f"no dataset manifest at {path}")
    with open(path, "r") as f:
        manifest = json.load(f)
    if manifest.get("format") != FORMAT_NAME or manifest.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported dataset format {manifest.get('format')!r} "
                         f"version {manifest.get('version')!r}")
    return manifest


def load_dataset(directory: PathLike) -> Dataset:
    """
    Read a dataset written by ``save_dataset``.

    Raises:
        FileNotFoundError: If the manifest or a feature file is missing
        ValueError: If the manifest format is unknown or a label names an unknown class
    """
    directory = Path(directory)
    manifest = _read_manifest(directory)
    class_names = tuple(manifest["class_names"])
    frame_rate = float(manifest["frame_rate"])
    kind = LabelKind(manifest["labels"])
    label_path = directory / LABEL_FILES[kind]

    if kind == LabelKind.STRONG:
        labels = read_intervals(label_path, class_names)
    elif kind == LabelKind.SEQUENTIAL:
        labels = read_sequences(label_path, class_names)
    else:
        labels = read_tags(label_path, class_names)

    def load_bag(bag_id: str) -> Bag:
        features = np.load(directory / "features" / f"{bag_id}.npy")
        if kind == LabelKind.STRONG:
            return Bag(bag_id, features, frame_rate, strong=tuple(labels.get(bag_id, ())))
        if bag_id not in labels:
            raise MissingLabelError(kind, bag_id)
        if kind == LabelKind.SEQUENTIAL:
            return Bag(bag_id, features, frame_rate, stored_sequential=labels[bag_id])
        return Bag(bag_id, features, frame_rate, stored_weak=labels[bag_id])

    splits: Dict[str, List[Bag]] = {
        name: [load_bag(bag_id) for bag_id in manifest["splits"].get(name, [])] for name in SPLITS
    }
    dataset = Dataset(
        class_names=class_names,
        train=tuple(splits["train"]),
        valid=tuple(splits["valid"]),
        test=tuple(splits["test"]),
        metadata=manifest.get("metadata", {}),
    )
    logger.info("dataset_loaded", extra={"path": str(directory), "labels": kind.value,
                                         "train": len(dataset.train), "valid": len(dataset.valid),
                                         "test": len(dataset.test)})
    return dataset
