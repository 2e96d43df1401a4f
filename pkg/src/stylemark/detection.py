"""Model-free statistical watermark detection.

Reconstructs the keystream from the text alone, counts feature matches,
and combines one p-value per feature into a product score. No logit
source is consulted; only the text, the lexicon, gamma and a vocabulary
for token-id lookup are needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

from . import redgreen
from .generation import Vocabulary, first_alpha
from .keystream import init_key, update_on_sentence, update_on_word
from .norms import NUM_CLASSES, NormsLexicon
from .textops import split_sentences

SCHEMA_VERSION = 1

_RANDOM_LETTER_P = 1.0 / 26.0


def binomial_sf(n: int, k: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed in log space.

    k <= 0 gives 1.0 and k > n gives 0.0, so degenerate counters stay
    neutral.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    log_terms = [
        _log_comb(n, i) + i * log_p + (n - i) * log_q for i in range(k, n + 1)
    ]
    m = max(log_terms)
    return min(1.0, math.exp(m) * sum(math.exp(t - m) for t in log_terms))


def _log_comb(n: int, i: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)


def normal_sf(z: float) -> float:
    """Upper tail of the standard normal via the complementary error function."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    return NormalDist().inv_cdf(min(max(p, 1e-300), 1.0 - 1e-16))


@dataclass
class FeatureScore:
    p_value: float


@dataclass
class AcrosticScore(FeatureScore):
    checks: int = 0
    matches: int = 0


@dataclass
class SensorimotorScore(FeatureScore):
    checks: list[int] = field(default_factory=lambda: [0] * NUM_CLASSES)
    matches: list[int] = field(default_factory=lambda: [0] * NUM_CLASSES)
    class_p_values: list[float] = field(default_factory=lambda: [1.0] * NUM_CLASSES)


@dataclass
class RedGreenScore(FeatureScore):
    transitions: int = 0
    green_count: int = 0
    z_score: float = 0.0


@dataclass
class DetectionReport:
    acro: AcrosticScore
    senso: SensorimotorScore
    redgreen: RedGreenScore
    final_score: float
    equivalent_z: float
    alpha: float
    verdict: bool
    word_states: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "acrostic": {
                "checks": self.acro.checks,
                "matches": self.acro.matches,
                "p_value": self.acro.p_value,
            },
            "sensorimotor": {
                "checks": self.senso.checks,
                "matches": self.senso.matches,
                "class_p_values": self.senso.class_p_values,
                "p_value": self.senso.p_value,
            },
            "redgreen": {
                "transitions": self.redgreen.transitions,
                "green_count": self.redgreen.green_count,
                "z_score": self.redgreen.z_score,
                "p_value": self.redgreen.p_value,
            },
            "final_score": self.final_score,
            "equivalent_z": self.equivalent_z,
            "alpha": self.alpha,
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def detect(
    text: str,
    lexicon: NormsLexicon,
    gamma: float,
    vocabulary: Vocabulary,
    alpha: float = 0.05,
) -> DetectionReport:
    """Score a text for the three-feature ensemble watermark."""
    state = init_key()
    acro = AcrosticScore(p_value=1.0)
    senso = SensorimotorScore(p_value=1.0)
    rg = RedGreenScore(p_value=1.0)
    word_states: list[tuple[int, int]] = []
    prev_word: str | None = None

    for i, span in enumerate(split_sentences(text)):
        for j, word in enumerate(span.words):
            word_states.append((state.senso_class, state.acro_letter))
            if j == 0 and i > 0:
                acro.checks += 1
                if first_alpha(word) == state.letter:
                    acro.matches += 1
            word_class = lexicon.class_of(word)
            if word_class is not None:
                senso.checks[state.senso_class] += 1
                if word_class == state.senso_class:
                    senso.matches[state.senso_class] += 1
            if prev_word is not None:
                rg.transitions += 1
                token_id = vocabulary.id_for_word(word)
                if redgreen.is_green(prev_word, token_id, vocabulary.size, gamma):
                    rg.green_count += 1
            state = update_on_word(state, word)
            prev_word = word.lower()
        state = update_on_sentence(state, span)

    acro.p_value = binomial_sf(acro.checks, acro.matches, _RANDOM_LETTER_P)
    senso.class_p_values = [
        binomial_sf(senso.checks[c], senso.matches[c], lexicon.baselines[c])
        for c in range(NUM_CLASSES)
    ]
    senso.p_value = math.prod(senso.class_p_values)
    if rg.transitions > 0:
        expected = gamma * rg.transitions
        variance = rg.transitions * gamma * (1.0 - gamma)
        rg.z_score = (rg.green_count - expected) / math.sqrt(variance)
        rg.p_value = normal_sf(rg.z_score)
    else:
        rg.z_score = 0.0
        rg.p_value = 1.0

    final_score = acro.p_value * senso.p_value * rg.p_value
    return DetectionReport(
        acro=acro,
        senso=senso,
        redgreen=rg,
        final_score=final_score,
        equivalent_z=normal_quantile(final_score),
        alpha=alpha,
        verdict=final_score < alpha,
        word_states=word_states,
    )


def verdict(report: DetectionReport, alpha: float) -> bool:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return report.final_score < alpha
