"""Streaming watermarked generation against a pluggable logit source.

The built-in toy model is a word-level add-k n-gram model, so token == word
and the boost predicates are unambiguous. Punctuation characters are their
own tokens and attach to the preceding word when text is rendered, which
keeps the rendered text round-trippable through the detector's splitter.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import redgreen
from .keystream import KeyState, init_key, update_on_sentence, update_on_word
from .norms import NUM_CLASSES, NormsLexicon
from .textops import SENTENCE_TERMINATORS, strip_outer_punct

UNK = "<unk>"
EOT = "<eot>"

FEATURES = ("acro", "senso", "redgreen")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WatermarkConfig:
    delta_acro: float = 0.0
    delta_senso: float = 0.0
    delta_redgreen: float = 0.0
    gamma: float = 0.5
    enabled: frozenset[str] = frozenset(FEATURES)
    max_tokens: int = 200
    min_tokens: int = 0  # end-of-text is masked before this many tokens
    sampler: str = "multinomial"  # or "greedy"
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        unknown = set(self.enabled) - set(FEATURES)
        if unknown:
            raise ValueError(f"unknown features: {sorted(unknown)}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.sampler not in ("multinomial", "greedy"):
            raise ValueError(f"unknown sampler {self.sampler!r}")


class LogitSource(Protocol):
    vocabulary: "Vocabulary"

    def next_logits(self, context: Sequence[int]) -> np.ndarray: ...


class Vocabulary:
    """Ordered token strings with boost-predicate caches.

    Tokens are lowercase. A token is a *word* if stripping outer punctuation
    leaves something; the specials are never words.
    """

    def __init__(self, tokens: Sequence[str]):
        self.tokens = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.size = len(self.tokens)
        self.unk_id = self.index.get(UNK)
        self.eot_id = self.index.get(EOT)
        self._word_flags = np.array(
            [
                bool(strip_outer_punct(t)) and t not in (UNK, EOT)
                for t in self.tokens
            ],
            dtype=bool,
        )
        self._letter_masks = self._build_letter_masks()
        self._class_masks: tuple[int, list[np.ndarray]] | None = None

    def _build_letter_masks(self) -> list[np.ndarray]:
        masks = [np.zeros(self.size, dtype=bool) for _ in range(26)]
        for i, token in enumerate(self.tokens):
            if not self._word_flags[i]:
                continue
            letter = first_alpha(token)
            if letter is not None:
                masks[ord(letter) - ord("a")][i] = True
        return masks

    def is_word(self, token_id: int) -> bool:
        return bool(self._word_flags[token_id])

    def letter_mask(self, letter_index: int) -> np.ndarray:
        return self._letter_masks[letter_index]

    def class_mask(self, lexicon: NormsLexicon, class_index: int) -> np.ndarray:
        if self._class_masks is None or self._class_masks[0] != id(lexicon):
            masks = [np.zeros(self.size, dtype=bool) for _ in range(NUM_CLASSES)]
            for i, token in enumerate(self.tokens):
                if not self._word_flags[i]:
                    continue
                cls = lexicon.class_of(token)
                if cls is not None:
                    masks[cls][i] = True
            self._class_masks = (id(lexicon), masks)
        return self._class_masks[1][class_index]

    def id_for_word(self, word: str) -> int:
        """Token id for a (surface) word, UNK id for out-of-vocabulary."""
        token_id = self.index.get(word.lower())
        if token_id is None:
            if self.unk_id is None:
                raise GenerationError("vocabulary has no UNK token")
            return self.unk_id
        return token_id


def first_alpha(token: str) -> str | None:
    for ch in token:
        if ch.isalpha():
            return ch.lower()
    return None


def tokenize(text: str) -> list[str]:
    """Lowercase word-level tokens; outer punctuation chars become tokens."""
    out: list[str] = []
    for chunk in text.lower().split():
        core = strip_outer_punct(chunk)
        if not core:
            out.extend(chunk)
            continue
        start = chunk.find(core)
        out.extend(chunk[:start])
        out.append(core)
        out.extend(chunk[start + len(core):])
    return out


def render(tokens: Sequence[str]) -> str:
    """Inverse-ish of tokenize: punctuation tokens attach to the left."""
    pieces: list[str] = []
    for token in tokens:
        if not strip_outer_punct(token) and pieces:
            pieces[-1] += token
        else:
            pieces.append(token)
    return " ".join(pieces)


@dataclass
class StepRecord:
    step: int
    token_id: int
    token: str
    senso_class: int
    acro_letter: int
    sentence_start: bool
    acro_boost_applied: bool
    senso_boost_count: int
    green_boost_count: int


@dataclass
class GenerationTrace:
    steps: list[StepRecord] = field(default_factory=list)
    # detector-mirroring counters and per-word key states
    word_states: list[tuple[int, int]] = field(default_factory=list)
    acro_checks: int = 0
    acro_matches: int = 0
    senso_checks: list[int] = field(default_factory=lambda: [0] * NUM_CLASSES)
    senso_matches: list[int] = field(default_factory=lambda: [0] * NUM_CLASSES)
    transitions: int = 0
    green_hits: int = 0

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(vars(s), sort_keys=True) for s in self.steps)


def adjust_logits(
    logits: np.ndarray,
    state: KeyState,
    sentence_start: bool,
    prev_token: str,
    config: WatermarkConfig,
    lexicon: NormsLexicon | None,
    vocabulary: Vocabulary,
) -> np.ndarray:
    """Apply the per-step ensemble boosts, returning a new vector.

    Acrostic and sensorimotor boosts are mutually exclusive (sentence starts
    take the acrostic branch); the red-green boost applies on every step.
    """
    if len(logits) != vocabulary.size:
        raise ValueError(
            f"logit length {len(logits)} != vocabulary size {vocabulary.size}"
        )
    adjusted = np.array(logits, dtype=np.float64, copy=True)
    if sentence_start:
        if "acro" in config.enabled and config.delta_acro:
            adjusted[vocabulary.letter_mask(state.acro_letter)] += config.delta_acro
    elif "senso" in config.enabled and config.delta_senso and lexicon is not None:
        adjusted[vocabulary.class_mask(lexicon, state.senso_class)] += config.delta_senso
    if "redgreen" in config.enabled and config.delta_redgreen:
        mask = redgreen.green_mask(prev_token, vocabulary.size, config.gamma)
        adjusted[mask] += config.delta_redgreen
    return adjusted


def _sample(adjusted: np.ndarray, config: WatermarkConfig, rng: random.Random) -> int:
    if config.sampler == "greedy":
        return int(np.argmax(adjusted))
    scaled = adjusted / max(config.temperature, 1e-9)
    scaled = scaled - scaled.max()
    probs = np.exp(scaled)
    probs /= probs.sum()
    return int(np.searchsorted(np.cumsum(probs), rng.random(), side="right").clip(0, len(probs) - 1))


def generate(
    model: LogitSource,
    prompt: str,
    config: WatermarkConfig,
    lexicon: NormsLexicon | None = None,
) -> tuple[str, GenerationTrace]:
    """Generate a watermarked completion for ``prompt``.

    The keystream starts fresh at the completion boundary so that the
    detector, which only ever sees the completion text, reconstructs the
    identical state sequence.
    """
    vocab = model.vocabulary
    context = [vocab.id_for_word(t) if strip_outer_punct(t) else vocab.index.get(t, vocab.unk_id)
               for t in tokenize(prompt)]
    rng = random.Random(config.seed)
    state = init_key()
    trace = GenerationTrace()
    emitted: list[str] = []
    sentence_words: list[str] = []
    sentence_tokens: list[str] = []
    sentences_done = 0
    prev_word: str | None = None

    for step in range(config.max_tokens):
        try:
            logits = model.next_logits(context)
        except Exception as exc:  # propagate with position info
            raise GenerationError(f"logit source failed at step {step}: {exc}") from exc
        sentence_start = not sentence_words
        adjusted = adjust_logits(
            logits, state, sentence_start,
            prev_word if prev_word is not None else "",
            config, lexicon, vocab,
        )
        if vocab.unk_id is not None:
            adjusted[vocab.unk_id] = -np.inf  # the toy model never emits UNK
        if vocab.eot_id is not None and step < config.min_tokens:
            adjusted[vocab.eot_id] = -np.inf
        token_id = _sample(adjusted, config, rng)
        if token_id == vocab.eot_id:
            break
        token = vocab.tokens[token_id]
        record = StepRecord(
            step=step,
            token_id=token_id,
            token=token,
            senso_class=state.senso_class,
            acro_letter=state.acro_letter,
            sentence_start=sentence_start,
            acro_boost_applied=sentence_start and "acro" in config.enabled,
            senso_boost_count=0,
            green_boost_count=0,
        )
        trace.steps.append(record)
        context.append(token_id)
        emitted.append(token)
        sentence_tokens.append(token)

        if vocab.is_word(token_id):
            word = token
            trace.word_states.append((state.senso_class, state.acro_letter))
            # mirror the detector's counters exactly
            if sentence_start and sentences_done >= 1:
                trace.acro_checks += 1
                if first_alpha(word) == state.letter:
                    trace.acro_matches += 1
            if lexicon is not None:
                word_class = lexicon.class_of(word)
                if word_class is not None:
                    trace.senso_checks[state.senso_class] += 1
                    if word_class == state.senso_class:
                        trace.senso_matches[state.senso_class] += 1
            if prev_word is not None:
                trace.transitions += 1
                if redgreen.is_green(prev_word, token_id, vocab.size, config.gamma):
                    trace.green_hits += 1
            state = update_on_word(state, word)
            prev_word = word
            sentence_words.append(word)
        elif token in SENTENCE_TERMINATORS:
            if sentence_words:
                state = update_on_sentence(state, render(sentence_tokens))
                sentences_done += 1
            sentence_words = []
            sentence_tokens = []

    return render(emitted), trace


class ToyModel:
    """Word-level n-gram logit source with add-k smoothing."""

    def __init__(
        self,
        vocabulary: Vocabulary,
        counts: dict[tuple[int, ...], dict[int, int]],
        order: int,
        smoothing: float,
    ):
        if order not in (2, 3):
            raise ValueError(f"order must be 2 or 3, got {order}")
        if smoothing <= 0:
            raise ValueError("smoothing must be positive")
        self.vocabulary = vocabulary
        self.counts = counts
        self.order = order
        self.smoothing = smoothing
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def next_logits(self, context: Sequence[int]) -> np.ndarray:
        key = tuple(context[-(self.order - 1):]) if self.order > 1 else ()
        cached = self._cache.get(key)
        if cached is None:
            v = self.vocabulary.size
            counts = np.zeros(v, dtype=np.float64)
            for token_id, count in self.counts.get(key, {}).items():
                counts[token_id] = count
            probs = (counts + self.smoothing) / (counts.sum() + self.smoothing * v)
            cached = np.log(probs)
            cached.setflags(write=False)
            self._cache[key] = cached
        return cached

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "stylemark-toy-model",
            "version": 1,
            "order": self.order,
            "smoothing": self.smoothing,
            "tokens": list(self.vocabulary.tokens),
            "counts": [
                [list(ctx), sorted(table.items())]
                for ctx, table in sorted(self.counts.items())
            ],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ToyModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "stylemark-toy-model":
            raise ValueError(f"{path}: not a toy model dump")
        counts = {
            tuple(ctx): {int(t): int(c) for t, c in table}
            for ctx, table in payload["counts"]
        }
        return cls(
            Vocabulary(payload["tokens"]),
            counts,
            payload["order"],
            payload["smoothing"],
        )


def train_toy_model(
    corpus: str | Path, order: int = 2, smoothing: float = 1.0
) -> ToyModel:
    """Count n-grams over a plain-text corpus (documents split on blank lines)."""
    text = Path(corpus).read_text(encoding="utf-8")
    documents = [d for d in text.split("\n\n") if d.strip()]
    if not documents:
        raise ValueError(f"empty corpus: {corpus}")
    doc_tokens = [tokenize(d) + [EOT] for d in documents]
    types = sorted({t for doc in doc_tokens for t in doc if t != EOT})
    vocab = Vocabulary(types + [UNK, EOT])
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for doc in doc_tokens:
        ids = [vocab.index[t] for t in doc]
        for i in range(order - 1, len(ids)):
            key = tuple(ids[i - order + 1: i])
            counts.setdefault(key, {})
            counts[key][ids[i]] = counts[key].get(ids[i], 0) + 1
    return ToyModel(vocab, counts, order, smoothing)


def perplexity(model: LogitSource, text: str) -> float:
    """exp(mean negative log-probability) under the unwatermarked model."""
    vocab = model.vocabulary
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("cannot score empty text")
    ids = [vocab.index.get(t, vocab.unk_id) for t in tokens]
    total = 0.0
    for i, token_id in enumerate(ids):
        logits = model.next_logits(ids[:i])
        logprobs = logits - _logsumexp(logits)
        total += logprobs[token_id]
    return math.exp(-total / len(ids))


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))
