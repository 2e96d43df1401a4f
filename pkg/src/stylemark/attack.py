"""Bounded lexical-substitution attack on watermarked text.

Replaces words in a seeded-random order until at least ``min_fraction`` of
the words differ, keeping word count, sentence boundaries and punctuation
intact. The paper-style neural mask-filler is out of scope; external
attackers can be plugged in through a JSON-over-stdio subprocess contract.
"""

from __future__ import annotations

import csv
import json
import random
import re
import subprocess
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .generation import Vocabulary
from .textops import strip_outer_punct

_WHITESPACE = re.compile(r"(\s+)")


class AttackError(RuntimeError):
    pass


@dataclass(frozen=True)
class AttackConfig:
    min_fraction: float = 0.10
    substitution: str = "synonym-table"  # or "random-vocab"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.min_fraction < 1.0:
            raise ValueError(f"min_fraction must be in (0, 1), got {self.min_fraction}")
        if self.substitution not in ("synonym-table", "random-vocab"):
            raise ValueError(f"unknown substitution source {self.substitution!r}")


def load_synonyms(path: str | Path | None = None) -> dict[str, list[str]]:
    """Two-column CSV (word, replacement) -> word -> candidate list."""
    if path is None:
        handle = (resources.files("stylemark.data") / "synonyms.csv").open(
            "r", encoding="utf-8", newline=""
        )
    else:
        handle = Path(path).open("r", encoding="utf-8", newline="")
    table: dict[str, list[str]] = {}
    with handle:
        for row in csv.reader(handle):
            if not row or row[0].startswith("#") or row[0] == "word":
                continue
            table.setdefault(row[0].strip().lower(), []).append(row[1].strip().lower())
    return table


def paraphrase_attack(
    text: str,
    config: AttackConfig,
    vocabulary: Vocabulary | None = None,
    synonyms: dict[str, list[str]] | None = None,
) -> tuple[str, int, int]:
    """Attack ``text``; returns (attacked_text, replaced_count, total_words)."""
    chunks = _WHITESPACE.split(text)
    word_positions = [
        i for i, chunk in enumerate(chunks)
        if i % 2 == 0 and strip_outer_punct(chunk)
    ]
    total_words = len(word_positions)
    if total_words == 0:
        raise AttackError("text has no words to attack")
    if config.substitution == "synonym-table":
        if synonyms is None:
            raise AttackError("synonym-table substitution requires a synonym table")
        propose = lambda rng, word: _from_table(rng, word, synonyms)
    else:
        if vocabulary is None:
            raise AttackError("random-vocab substitution requires a vocabulary")
        candidates = [
            t for i, t in enumerate(vocabulary.tokens) if vocabulary.is_word(i)
        ]
        propose = lambda rng, word: rng.choice(candidates)

    rng = random.Random(config.seed)
    order = word_positions[:]
    rng.shuffle(order)
    replaced = 0
    for position in order:
        if replaced / total_words >= config.min_fraction:
            break
        chunk = chunks[position]
        core = strip_outer_punct(chunk)
        proposal = propose(rng, core.lower())
        # the attack only succeeds when the candidate actually differs
        if proposal is None or proposal == core.lower():
            continue
        if core and core[0].isupper():
            proposal = proposal.capitalize()
        start = chunk.find(core)
        chunks[position] = chunk[:start] + proposal + chunk[start + len(core):]
        replaced += 1
    return "".join(chunks), replaced, total_words


def _from_table(rng: random.Random, word: str, table: dict[str, list[str]]) -> str | None:
    options = table.get(word)
    if not options:
        return None
    return rng.choice(options)


def external_attack(command: list[str], text: str, timeout: float = 120.0) -> str:
    """Run an external attacker: JSON {"text": ...} in, {"attacked_text": ...} out."""
    result = subprocess.run(
        command,
        input=json.dumps({"text": text}),
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    if result.returncode != 0:
        raise AttackError(f"external attacker failed ({result.returncode}): {result.stderr.strip()}")
    try:
        return json.loads(result.stdout)["attacked_text"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise AttackError(f"external attacker produced invalid output: {exc}") from exc
