"""Rolling key state shared by generation and detection.

The sensorimotor class index re-keys after every completed word, the
acrostic letter index after every completed sentence. Both sides replay
the identical event sequence, so states must match exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .textops import HashRange, SentenceSpan, hash_to_range, lemmatize, normalize_sentence

SENSO_RANGE = HashRange(0, 10)
ACRO_RANGE = HashRange(0, 25)

_INIT_PAYLOAD = b"init"


@dataclass(frozen=True)
class KeyState:
    senso_class: int  # [0, 10]
    acro_letter: int  # [0, 25], 0 = 'a'

    @property
    def letter(self) -> str:
        return chr(ord("a") + self.acro_letter)


def init_key() -> KeyState:
    return KeyState(
        senso_class=hash_to_range(_INIT_PAYLOAD, SENSO_RANGE),
        acro_letter=hash_to_range(_INIT_PAYLOAD, ACRO_RANGE),
    )


def update_on_word(state: KeyState, word: str) -> KeyState:
    if not word:
        return state
    return replace(state, senso_class=hash_to_range(lemmatize(word.lower()), SENSO_RANGE))


def update_on_sentence(state: KeyState, sentence: SentenceSpan | str) -> KeyState:
    return replace(
        state, acro_letter=hash_to_range(normalize_sentence(sentence), ACRO_RANGE)
    )
