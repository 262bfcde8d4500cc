"""
Tab-separated label files.

intervals:  recording_id  onset  offset  class_name    (one event per row)
sequences:  recording_id  tokens                       (class names joined by spaces)
tags:       recording_id  classes                      (class names joined by commas)

Files have no header row. Times are written in shortest round-trip form and
read back exactly, so stored strong labels reload bit-identical.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import pandas as pd

from core.models.labels import EventInterval, TokenSequence, WeakLabel

INTERVAL_COLUMNS = ["recording_id", "onset", "offset", "class_name"]
SEQUENCE_COLUMNS = ["recording_id", "tokens"]
TAG_COLUMNS = ["recording_id", "classes"]

PathLike = Union[str, Path]


def _class_index(class_names: Sequence[str]) -> Dict[str, int]:
    return {name: i for i, name in enumerate(class_names)}


def _lookup(index: Mapping[str, int], name: str, path: PathLike) -> int:
    try:
        return index[name]
    except KeyError:
        raise ValueError(f"{path}: unknown class name '{name}'") from None


def _write(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep="\t", header=False, index=False)
    return path


def _read(path: PathLike, columns: List[str]) -> pd.DataFrame:
    if Path(path).stat().st_size == 0:
        return pd.DataFrame(columns=columns)
    return pd.read_csv(path, sep="\t", header=None, names=columns, dtype={columns[0]: str},
                       keep_default_na=False, float_precision="round_trip")


def write_intervals(
    rows: Iterable[Tuple[str, EventInterval]],
    class_names: Sequence[str],
    path: PathLike,
) -> Path:
    frame = pd.DataFrame(
        [(rid, iv.onset, iv.offset, class_names[iv.class_id]) for rid, iv in rows],
        columns=INTERVAL_COLUMNS,
    )
    return _write(frame, path)


def read_intervals(path: PathLike, class_names: Sequence[str]) -> Dict[str, List[EventInterval]]:
    """Recording id -> intervals in file order."""
    index = _class_index(class_names)
    result: Dict[str, List[EventInterval]] = {}
    for row in _read(path, INTERVAL_COLUMNS).itertuples(index=False):
        interval = EventInterval(
            onset=float(row.onset), offset=float(row.offset),
            class_id=_lookup(index, str(row.class_name), path),
        )
        result.setdefault(str(row.recording_id), []).append(interval)
    return result


def write_sequences(rows: Iterable[Tuple[str, TokenSequence]], class_names: Sequence[str], path: PathLike) -> Path:
    frame = pd.DataFrame(
        [(rid, " ".join(class_names[t] for t in tokens)) for rid, tokens in rows],
        columns=SEQUENCE_COLUMNS,
    )
    return _write(frame, path)


def read_sequences(path: PathLike, class_names: Sequence[str]) -> Dict[str, TokenSequence]:
    index = _class_index(class_names)
    result: Dict[str, TokenSequence] = {}
    for row in _read(path, SEQUENCE_COLUMNS).itertuples(index=False):
        names = str(row.tokens).split()
        result[str(row.recording_id)] = tuple(_lookup(index, n, path) for n in names)
    return result


def write_tags(rows: Iterable[Tuple[str, WeakLabel]], class_names: Sequence[str], path: PathLike) -> Path:
    frame = pd.DataFrame(
        [(rid, ",".join(class_names[c] for c in label.sorted_classes())) for rid, label in rows],
        columns=TAG_COLUMNS,
    )
    return _write(frame, path)


def read_tags(path: PathLike, class_names: Sequence[str]) -> Dict[str, WeakLabel]:
    index = _class_index(class_names)
    result: Dict[str, WeakLabel] = {}
    for row in _read(path, TAG_COLUMNS).itertuples(index=False):
        names = [n for n in str(row.classes).split(",") if n]
        result[str(row.recording_id)] = WeakLabel(frozenset(_lookup(index, n, path) for n in names))
    return result
