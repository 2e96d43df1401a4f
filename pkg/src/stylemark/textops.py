"""Deterministic text segmentation, normalization and keyed hashing.

Generation and detection share these functions bit-exactly; the stopword
list and lemmatizer rule files are part of the watermark key contract.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

SENTENCE_TERMINATORS = {".", "!", "?"}

_U32 = 2**32


@dataclass(frozen=True)
class SentenceSpan:
    """One sentence-like unit of the input text.

    ``start``/``end`` are character offsets into the original text, so the
    original can be reconstructed exactly from consecutive spans.
    """

    text: str
    words: tuple[str, ...]
    terminal_punct: str | None
    start: int
    end: int


@dataclass(frozen=True)
class HashRange:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"invalid hash range [{self.lo}, {self.hi}]")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split on ``.``, ``!``, ``?`` exactly; trailing text becomes a fragment.

    Spans that contain no words (e.g. the extra dots of an ellipsis) are
    dropped. Total: never raises; empty input gives an empty list.
    """
    spans: list[SentenceSpan] = []
    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch in SENTENCE_TERMINATORS:
            _append_span(spans, text, start, i + 1, ch)
            start = i + 1
    if start < n:
        _append_span(spans, text, start, n, None)
    return spans


def _append_span(
    spans: list[SentenceSpan], text: str, start: int, end: int, punct: str | None
) -> None:
    raw = text[start:end]
    words = split_words(raw)
    if not words:
        return
    spans.append(
        SentenceSpan(
            text=raw.strip(),
            words=tuple(words),
            terminal_punct=punct,
            start=start,
            end=end,
        )
    )


def split_words(sentence: str) -> list[str]:
    """Whitespace-split, then strip leading/trailing punctuation per token.

    Internal punctuation (hyphens, apostrophes) is kept. Tokens that are
    punctuation-only disappear.
    """
    words = []
    for token in sentence.split():
        word = strip_outer_punct(token)
        if word:
            words.append(word)
    return words


def strip_outer_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=1)
def _lemma_exceptions() -> dict[str, str]:
    table = {}
    for line in _data_lines("lemma_exceptions.txt"):
        form, lemma = line.split()
        table[form] = lemma
    return table


@lru_cache(maxsize=1)
def _lemma_suffix_rules() -> tuple[tuple[str, str, int], ...]:
    rules = []
    for line in _data_lines("lemma_suffixes.txt"):
        suffix, replacement, min_stem = line.split()
        rules.append((suffix, "" if replacement == "-" else replacement, int(min_stem)))
    return tuple(rules)


def _data_lines(name: str) -> list[str]:
    path = resources.files("stylemark.data") / name
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


_DOUBLED_KEEP = {"ll", "ss", "zz"}
_VOWELS = set("aeiou")


@lru_cache(maxsize=65536)
def lemmatize(word: str) -> str:
    """Rule-based lemma of a lowercased word; fixed and deterministic.

    Rules are applied to a fixpoint so the function is idempotent: the
    lemma of a lemma is itself.
    """
    word = word.lower()
    for _ in range(8):  # rule passes strictly shorten; 8 is ample
        out = _lemmatize_once(word)
        if out == word:
            return word
        word = out
    return word


def _lemmatize_once(word: str) -> str:
    exception = _lemma_exceptions().get(word)
    if exception is not None:
        return exception
    for suffix, replacement, min_stem in _lemma_suffix_rules():
        if not word.endswith(suffix):
            continue
        stem = word[: len(word) - len(suffix)]
        if len(stem) < min_stem:
            continue
        if replacement == suffix:
            return word
        out = stem + replacement
        return _undouble(out) if suffix in ("ing", "ed") else out
    return word


def _undouble(word: str) -> str:
    if (
        len(word) >= 3
        and word[-1] == word[-2]
        and word[-1] not in _VOWELS
        and word[-2:] not in _DOUBLED_KEEP
    ):
        return word[:-1]
    return word


def normalize_sentence(sentence: SentenceSpan | str) -> str:
    """Lowercase, drop stopwords and punctuation, lemmatize, join with spaces.

    Idempotent on its own output; an all-stopword sentence maps to "".
    """
    if isinstance(sentence, SentenceSpan):
        words = sentence.words
    else:
        words = split_words(sentence)
    stops = stopwords()
    kept = []
    for word in words:
        lowered = word.lower()
        if lowered in stops:
            continue
        lemma = lemmatize(lowered)
        if lemma and lemma not in stops:
            kept.append(lemma)
    return " ".join(kept)


def hash_to_range(payload: bytes | str, hash_range: HashRange) -> int:
    """SHA-256 keyed reduction into an inclusive integer range.

    Digest read as a big-endian unsigned integer, reduced mod 2^32, then
    mod the range width, then shifted by the lower bound.
    """
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    value = int.from_bytes(digest, "big") % _U32
    return value % (hash_range.hi - hash_range.lo + 1) + hash_range.lo
