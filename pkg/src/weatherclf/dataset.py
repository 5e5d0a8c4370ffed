"""Directory-per-class corpora and the feature CSV interchange format."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import imaging
from .augment import IMAGE_SUFFIXES
from .errors import CsvFormatError, FileIOError, ParameterError, WeatherClfError
from .features import FEATURE_NAMES, ExtractionConfig, extract_features
from .svm import CLASSES, LabeledDataset

log = logging.getLogger(__name__)


@dataclass
class ExtractionResult:
    data: LabeledDataset
    skipped: list[tuple[str, str]]  # (relative path, reason)


def scan_corpus(root: str | Path) -> list[tuple[str, str]]:
    """``(relative_path, label)`` for every image under ``root/<label>/``.

    Only canonical class directories are read; the result is sorted by path.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileIOError(f"corpus directory not found: {root}")
    found = []
    for label in CLASSES:
        sub = root / label
        if not sub.is_dir():
            continue
        for p in sub.iterdir():
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
                found.append((p.relative_to(root).as_posix(), label))
    unknown = sorted(
        p.name for p in root.iterdir()
        if p.is_dir() and p.name not in CLASSES and p.name != "__pycache__"
    )
    if unknown:
        log.warning("ignoring non-class directories in %s: %s", root, ", ".join(unknown))
    return sorted(found)


def _extract_one(args):
    path, config = args
    try:
        return extract_features(imaging.load_image(path), config), None
    except WeatherClfError as exc:
        return None, str(exc)


def extract_corpus(
    root: str | Path,
    config: ExtractionConfig | None = None,
    jobs: int = 1,
) -> ExtractionResult:
    """Feature rows for a corpus; unreadable images are skipped with a warning."""
    config = config or ExtractionConfig()
    entries = scan_corpus(root)
    if not entries:
        raise ParameterError(f"no images found under class directories of {root}")
    root = Path(root)
    work = [(str(root / rel), config) for rel, _ in entries]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, work, chunksize=8))
    else:
        results = [_extract_one(w) for w in work]
    rows, labels, paths, skipped = [], [], [], []
    for (rel, label), (vec, err) in zip(entries, results):
        if vec is None:
            log.warning("skipping %s: %s", rel, err)
            skipped.append((rel, err))
            continue
        rows.append(vec)
        labels.append(label)
        paths.append(rel)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))
    return ExtractionResult(LabeledDataset(X, np.array(labels, dtype=object), paths), skipped)


def format_float(v: float) -> str:
    return f"{v:.9g}"


def write_features_csv(data: LabeledDataset, path: str | Path) -> None:
    header = [*data.feature_names, "label", "path"]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row, label, p in zip(data.X, data.y, data.paths):
                w.writerow([*(format_float(v) for v in row), label, p])
    except OSError as exc:
        raise FileIOError(f"cannot write {path}: {exc}") from exc


def read_features_csv(
    path: str | Path,
    feature_names: Sequence[str] = FEATURE_NAMES,
    allowed_labels: Sequence[str] | None = CLASSES,
) -> LabeledDataset:
    """Parse a feature CSV; any defect raises :class:`CsvFormatError` with its line."""
    expected = [*feature_names, "label", "path"]
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileIOError(f"cannot read {path}: {exc}") from exc
    rows, labels, paths = [], [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError("file is empty", line=1)
        if header != expected:
            raise CsvFormatError("header does not match the feature schema", line=1)
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(expected):
                raise CsvFormatError(f"expected {len(expected)} fields, got {len(rec)}", line=line_no)
            try:
                values = [float(v) for v in rec[: len(feature_names)]]
            except ValueError as exc:
                raise CsvFormatError(f"non-numeric feature value ({exc})", line=line_no) from exc
            if not all(np.isfinite(values)):
                raise CsvFormatError("non-finite feature value", line=line_no)
            label = rec[-2]
            if allowed_labels is not None and label not in allowed_labels:
                raise CsvFormatError(f"unknown label {label!r}", line=line_no)
            rows.append(values)
            labels.append(label)
            paths.append(rec[-1])
    if not rows:
        raise CsvFormatError("no data rows", line=2)
    X = np.array(rows, dtype=np.float64)
    return LabeledDataset(X, np.array(labels, dtype=object), paths, tuple(feature_names))
