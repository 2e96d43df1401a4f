"""Deterministic green-list construction keyed on the previous token.

The permutation generator is pinned: a splitmix64 stream seeded with the
32-bit keyed hash of the previous token (zero-extended to 64 bits) drives
a Fisher-Yates shuffle of [0, V). The first floor(gamma * V) shuffled ids
form the green list. Any consumer, in any language, must reproduce this
bit-exactly; nothing here may fall back to a platform RNG.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .textops import HashRange, hash_to_range

_SEED_RANGE = HashRange(0, 2**32 - 1)
_M64 = (1 << 64) - 1


class GreenListError(ValueError):
    """Invalid green-list configuration."""


def splitmix64_stream(seed: int):
    """Infinite splitmix64 sequence from a 64-bit seed."""
    state = seed & _M64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        yield z ^ (z >> 31)


def permute_vocab(prev_token: str, vocab_size: int) -> list[int]:
    """Keyed Fisher-Yates permutation of [0, vocab_size)."""
    seed = hash_to_range(prev_token, _SEED_RANGE)
    stream = splitmix64_stream(seed)
    ids = list(range(vocab_size))
    for i in range(vocab_size - 1, 0, -1):
        j = next(stream) % (i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    return ids


def _check(vocab_size: int, gamma: float) -> None:
    if vocab_size < 1:
        raise GreenListError(f"vocab_size must be >= 1, got {vocab_size}")
    if not 0.0 < gamma < 1.0:
        raise GreenListError(f"gamma must be in (0, 1), got {gamma}")


def green_list(prev_token: str, vocab_size: int, gamma: float) -> list[int]:
    """Green token ids: first floor(gamma * V) of the keyed permutation."""
    _check(vocab_size, gamma)
    count = int(gamma * vocab_size)
    return permute_vocab(prev_token, vocab_size)[:count]


@lru_cache(maxsize=16384)
def green_mask(prev_token: str, vocab_size: int, gamma: float) -> np.ndarray:
    """Boolean membership vector over token ids; memoized, read-only."""
    mask = np.zeros(vocab_size, dtype=bool)
    mask[green_list(prev_token, vocab_size, gamma)] = True
    mask.setflags(write=False)
    return mask


def is_green(prev_token: str, token_id: int, vocab_size: int, gamma: float) -> bool:
    _check(vocab_size, gamma)
    if not 0 <= token_id < vocab_size:
        raise GreenListError(f"token id {token_id} outside [0, {vocab_size})")
    return bool(green_mask(prev_token, vocab_size, gamma)[token_id])
