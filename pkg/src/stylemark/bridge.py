"""Per-step watermark sessions for external inference stacks.

A ``StepSession`` wraps the keystream plus ``adjust_logits`` behind an
incremental text interface: the host feeds the text emitted since the last
step and gets back adjusted logits. Nothing is reimplemented here; the
session delegates to the same hash, PRNG and boost code the generator
uses, so keystream parity is structural.

``serve`` speaks a JSON-lines protocol over stdio (one request object per
line) so non-Python hosts can drive sessions through a subprocess. See the
bridge package README for the message shapes.
"""

from __future__ import annotations

import json
import sys
from typing import Sequence

import numpy as np

from .generation import Vocabulary, WatermarkConfig, adjust_logits
from .keystream import KeyState, init_key, update_on_sentence, update_on_word
from .norms import NormsLexicon, load_class_frequencies, load_norms
from .textops import SENTENCE_TERMINATORS, strip_outer_punct


class BridgeError(RuntimeError):
    pass


class StepSession:
    """One generation stream's watermark state; not thread-shareable."""

    def __init__(
        self,
        config: WatermarkConfig,
        vocabulary: Sequence[str],
        lexicon: NormsLexicon | None = None,
    ):
        if len(vocabulary) == 0:
            raise BridgeError("vocabulary must be non-empty")
        self.vocabulary = Vocabulary(vocabulary)
        self.config = config
        self.lexicon = lexicon
        self.state: KeyState = init_key()
        self._pending = ""  # partial word at the stream tail
        self._sentence_raw = ""
        self._sentence_has_words = False
        self._prev_word = ""

    @property
    def sentence_start(self) -> bool:
        return not self._sentence_has_words and not strip_outer_punct(self._pending)

    def feed(self, delta: str) -> None:
        """Consume newly emitted text, updating the keystream."""
        for ch in delta:
            if ch.isspace():
                self._complete_word()
                self._sentence_raw += ch
                continue
            self._sentence_raw += ch
            if ch in SENTENCE_TERMINATORS:
                self._complete_word()
                if self._sentence_has_words:
                    self.state = update_on_sentence(self.state, self._sentence_raw)
                self._sentence_raw = ""
                self._sentence_has_words = False
            else:
                self._pending += ch

    def _complete_word(self) -> None:
        word = strip_outer_punct(self._pending).lower()
        self._pending = ""
        if not word:
            return
        self.state = update_on_word(self.state, word)
        self._prev_word = word
        self._sentence_has_words = True

    def step(self, logits: Sequence[float], delta: str = "") -> np.ndarray:
        """Feed ``delta`` then adjust the current logits."""
        if len(logits) != self.vocabulary.size:
            raise BridgeError(
                f"logit length {len(logits)} != vocabulary size {self.vocabulary.size}"
            )
        self.feed(delta)
        return adjust_logits(
            np.asarray(logits, dtype=np.float64),
            self.state,
            self.sentence_start,
            self._prev_word,
            self.config,
            self.lexicon,
            self.vocabulary,
        )


def session_new(
    config: WatermarkConfig,
    vocabulary: Sequence[str],
    norms_path: str | None = None,
    frequencies: str | None = None,
) -> StepSession:
    lexicon = None
    if norms_path:
        baselines = load_class_frequencies(frequencies) if frequencies else None
        lexicon = load_norms(norms_path, baselines)
    return StepSession(config, vocabulary, lexicon)


def _config_from_payload(payload: dict) -> WatermarkConfig:
    fields = {}
    for key in ("delta_acro", "delta_senso", "delta_redgreen", "gamma"):
        if key in payload:
            fields[key] = float(payload[key])
    if "enabled" in payload:
        fields["enabled"] = frozenset(payload["enabled"])
    return WatermarkConfig(**fields)


def serve(stdin=None, stdout=None) -> None:
    """JSON-lines session server; one session per ``new`` request."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    sessions: dict[int, StepSession] = {}
    next_id = 0
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            op = request["op"]
            if op == "new":
                session = session_new(
                    _config_from_payload(request.get("config", {})),
                    request["vocabulary"],
                    norms_path=request.get("norms_path"),
                    frequencies=request.get("frequencies_path"),
                )
                sessions[next_id] = session
                response = {
                    "ok": True,
                    "session": next_id,
                    "state": _state_dict(session),
                }
                next_id += 1
            elif op == "step":
                session = sessions[request["session"]]
                adjusted = session.step(request["logits"], request.get("delta", ""))
                response = {
                    "ok": True,
                    "logits": adjusted.tolist(),
                    "state": _state_dict(session),
                    "sentence_start": session.sentence_start,
                }
            elif op == "close":
                sessions.pop(request["session"], None)
                response = {"ok": True}
            else:
                response = {"ok": False, "error": f"unknown op {op!r}"}
        except Exception as exc:
            response = {"ok": False, "error": str(exc)}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


def _state_dict(session: StepSession) -> dict:
    return {
        "senso_class": session.state.senso_class,
        "acro_letter": session.state.acro_letter,
    }
