"""CIFAKE-layout dataset ingestion.

The expected layout is ``root/{train,test}/{REAL,FAKE}/*.png`` (any subset
of splits/labels may be present). Labels come only from the directory
names; files outside REAL/FAKE directories are never indexed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, NoSuchDirectory
from .images import load_image

__all__ = ["DatasetEntry", "DatasetIndex", "ingest_cifake", "load_entries"]

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp")

_SPLITS = ("train", "test")
_LABEL_DIRS = {"REAL": "real", "FAKE": "fake"}


@dataclass(frozen=True)
class DatasetEntry:
    path: Path
    label: str  # real | fake
    split: str  # train | test


@dataclass(frozen=True)
class DatasetIndex:
    entries: tuple[DatasetEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def count(self, label: str | None = None, split: str | None = None) -> int:
        return sum(
            1
            for e in self.entries
            if (label is None or e.label == label) and (split is None or e.split == split)
        )


def ingest_cifake(root_path: str | Path, expected_size: int = 32) -> DatasetIndex:
    """Index every image under the CIFAKE directory layout.

    Entries are sorted by (split, label, filename) so downstream iteration
    order is deterministic. Images that are not ``expected_size`` square
    are indexed anyway and only logged as a warning.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise NoSuchDirectory(f"dataset root {root} does not exist")
    entries = []
    for split in _SPLITS:
        for label_dir, label in _LABEL_DIRS.items():
            directory = root / split / label_dir
            if not directory.is_dir():
                continue
            for path in sorted(directory.iterdir()):
                if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
                    continue
                entries.append(DatasetEntry(path=path, label=label, split=split))
    if not entries:
        raise EmptyDataset(f"no images found under {root} (expected train|test / REAL|FAKE dirs)")
    entries.sort(key=lambda e: (e.split, e.label, e.path.name))
    if expected_size:
        _warn_on_size_mismatch(entries, expected_size)
    return DatasetIndex(entries=tuple(entries))


def _warn_on_size_mismatch(entries, expected_size: int) -> None:
    from PIL import Image

    for entry in entries:
        try:
            with Image.open(entry.path) as im:
                size = im.size
        except Exception as exc:
            logger.warning("unreadable image %s: %s", entry.path, exc)
            continue
        if size != (expected_size, expected_size):
            logger.warning(
                "image %s is %dx%d, not %dx%d; indexing it anyway",
                entry.path,
                size[0],
                size[1],
                expected_size,
                expected_size,
            )


def load_entries(index: DatasetIndex, limit: int | None = None) -> list[tuple[np.ndarray, str, DatasetEntry]]:
    """Materialize (image, label, entry) triples, optionally capped at ``limit``."""
    chosen = index.entries if limit is None else index.entries[:limit]
    return [(load_image(e.path), e.label, e) for e in chosen]
