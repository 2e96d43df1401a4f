"""Sensorimotor lexicon: dominant-class word map and per-class baselines.

The lexicon CSV has a header row ``word`` followed by the 11 rating columns
in the canonical class order below. A word's class is the argmax of its
ratings (ties break to the lowest class index); all-zero rows are dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .textops import lemmatize

CLASS_NAMES = (
    "touch",
    "hearing",
    "smell",
    "taste",
    "vision",
    "interoception",
    "mouth_throat",
    "hand_arm",
    "foot_leg",
    "head",
    "torso",
)
NUM_CLASSES = len(CLASS_NAMES)

UNIFORM = "UNIFORM"

_P_FLOOR = 1e-6


class NormsError(ValueError):
    """Malformed lexicon or frequency data."""


@dataclass(frozen=True)
class NormsLexicon:
    entries: dict[str, int]  # lemmatized lowercase word -> class index
    baselines: dict[int, float]  # class index -> p_c in (0, 1)

    def class_of(self, word: str) -> int | None:
        """Class index for a word (case-insensitive, lemmatized), else None."""
        return self.entries.get(lemmatize(word.lower()))

    def words_in_class(self, class_index: int) -> set[str]:
        return {w for w, c in self.entries.items() if c == class_index}


def load_norms(path: str | Path, baselines: dict[int, float] | None = None) -> NormsLexicon:
    path = Path(path)
    if not path.exists():
        raise NormsError(f"norms file not found: {path}")
    entries: dict[str, int] = {}
    surface_seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) != 1 + NUM_CLASSES:
            raise NormsError(f"{path}: expected header with word + {NUM_CLASSES} rating columns")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 1 + NUM_CLASSES:
                raise NormsError(f"{path}:{lineno}: expected {1 + NUM_CLASSES} columns, got {len(row)}")
            word = row[0].strip().lower()
            if not word:
                raise NormsError(f"{path}:{lineno}: empty word")
            if word in surface_seen:
                raise NormsError(f"{path}:{lineno}: duplicate word {word!r}")
            surface_seen.add(word)
            try:
                ratings = [float(cell) for cell in row[1:]]
            except ValueError as exc:
                raise NormsError(f"{path}:{lineno}: non-numeric rating: {exc}") from None
            if all(r == 0.0 for r in ratings):
                continue
            best = max(range(NUM_CLASSES), key=lambda c: (ratings[c], -c))
            entries[lemmatize(word)] = best
    if baselines is None:
        baselines = load_class_frequencies(UNIFORM)
    return NormsLexicon(entries=entries, baselines=baselines)


def load_class_frequencies(source: str | Path) -> dict[int, float]:
    """Per-class baseline probabilities p_c.

    ``UNIFORM`` gives 1/11 everywhere; otherwise a two-column CSV of
    class name and occurrence frequency, normalized over all classes and
    clamped into [1e-6, 1 - 1e-6]. Negative frequencies are rejected;
    zeroes are allowed and land on the clamp floor.
    """
    if source == UNIFORM:
        return {c: 1.0 / NUM_CLASSES for c in range(NUM_CLASSES)}
    path = Path(source)
    if not path.exists():
        raise NormsError(f"class frequency file not found: {path}")
    raw: dict[int, float] = {}
    index_by_name = {name: i for i, name in enumerate(CLASS_NAMES)}
    with path.open(newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) != 2:
                raise NormsError(f"{path}:{lineno}: expected 'class,frequency'")
            name = row[0].strip().lower()
            if name == "class":  # optional header
                continue
            if name not in index_by_name:
                raise NormsError(f"{path}:{lineno}: unknown class {name!r}")
            freq = float(row[1])
            if freq < 0:
                raise NormsError(f"{path}:{lineno}: negative frequency {freq}")
            raw[index_by_name[name]] = freq
    missing = [CLASS_NAMES[c] for c in range(NUM_CLASSES) if c not in raw]
    if missing:
        raise NormsError(f"{path}: missing classes: {', '.join(missing)}")
    total = sum(raw.values())
    if total <= 0:
        raise NormsError(f"{path}: total frequency is zero")
    return {
        c: min(max(raw[c] / total, _P_FLOOR), 1.0 - _P_FLOOR) for c in range(NUM_CLASSES)
    }
