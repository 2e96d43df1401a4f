"""Model-free detection: statistical primitives and generator agreement."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemark.detection import (
    DetectionReport,
    binomial_sf,
    detect,
    normal_quantile,
    normal_sf,
    verdict,
)
from stylemark.generation import WatermarkConfig, generate
from stylemark.harness import SETTINGS

# ---------------------------------------------------------------------------
# binomial survival function


def _binomial_sf_fraction(n: int, k: int, p: Fraction) -> Fraction:
    total = Fraction(0)
    for i in range(k, n + 1):
        total += math.comb(n, i) * p**i * (1 - p) ** (n - i)
    return total


@pytest.mark.parametrize("p", [Fraction(1, 26), Fraction(1, 11), Fraction(1, 2)])
def test_binomial_sf_vs_fraction_oracle(p):
    for n in range(0, 26):
        for k in range(1, n + 1):
            exact = float(_binomial_sf_fraction(n, k, p))
            got = binomial_sf(n, k, float(p))
            assert got == pytest.approx(exact, rel=1e-12), (n, k, p)


def test_binomial_sf_pinned():
    assert binomial_sf(3, 3, 0.5) == pytest.approx(0.125, rel=1e-12)
    assert binomial_sf(10, 3, 1 / 26) == pytest.approx(0.005569543488424083, rel=1e-12)


def test_binomial_sf_edges():
    assert binomial_sf(10, 0, 0.3) == 1.0
    assert binomial_sf(10, -2, 0.3) == 1.0
    assert binomial_sf(0, 0, 0.3) == 1.0
    assert binomial_sf(10, 11, 0.3) == 0.0
    assert binomial_sf(10, 5, 0.0) == 0.0
    assert binomial_sf(10, 5, 1.0) == 1.0
    with pytest.raises(ValueError):
        binomial_sf(10, 5, 1.5)
    with pytest.raises(ValueError):
        binomial_sf(-1, 0, 0.5)


@given(st.integers(1, 40), st.floats(0.01, 0.99))
@settings(max_examples=50, deadline=None)
def test_binomial_sf_monotone_in_k(n, p):
    values = [binomial_sf(n, k, p) for k in range(0, n + 2)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


# ---------------------------------------------------------------------------
# normal tail


def test_normal_sf_pinned():
    assert normal_sf(0.0) == 0.5
    assert normal_sf(2.0) == pytest.approx(0.0227501319, abs=1e-9)


def test_normal_sf_symmetry():
    for z in (0.3, 1.0, 2.5):
        assert normal_sf(z) + normal_sf(-z) == pytest.approx(1.0, rel=1e-12)


def test_normal_quantile_inverts_cdf():
    from statistics import NormalDist

    for p in (0.001, 0.05, 0.5, 0.93):
        assert NormalDist().cdf(normal_quantile(p)) == pytest.approx(p, rel=1e-9)
    # extreme scores stay finite
    assert math.isfinite(normal_quantile(0.0))
    assert math.isfinite(normal_quantile(1.0))


# ---------------------------------------------------------------------------
# detect on hand-checkable inputs


def test_detect_empty_text_is_neutral(toy_model, lexicon):
    report = detect("", lexicon, 0.5, toy_model.vocabulary)
    assert report.acro.p_value == 1.0
    assert report.senso.p_value == 1.0
    assert report.redgreen.p_value == 1.0
    assert report.final_score == 1.0
    assert not report.verdict


def test_detect_single_word_no_transitions(toy_model, lexicon):
    report = detect("Harbor.", lexicon, 0.5, toy_model.vocabulary)
    assert report.redgreen.transitions == 0
    assert report.redgreen.z_score == 0.0
    assert report.redgreen.p_value == 1.0
    assert report.acro.checks == 0  # the first sentence is never checked


def test_detect_counts_acro_checks_per_following_sentence(toy_model, lexicon):
    report = detect("One ship. Two docks. Three cranes.", lexicon, 0.5, toy_model.vocabulary)
    assert report.acro.checks == 2


def test_verdict_threshold_strict():
    report = DetectionReport(
        acro=None, senso=None, redgreen=None,
        final_score=0.05, equivalent_z=0.0, alpha=0.05, verdict=False,
    )
    assert not verdict(report, 0.05)  # equality is not detection
    report.final_score = 0.049999
    assert verdict(report, 0.05)
    with pytest.raises(ValueError):
        verdict(report, 0.0)


def test_report_json_schema(toy_model, lexicon):
    report = detect("One ship. Two docks.", lexicon, 0.5, toy_model.vocabulary)
    payload = report.to_dict()
    assert payload["schema_version"] == 1
    assert set(payload) >= {
        "acrostic", "sensorimotor", "redgreen", "final_score",
        "equivalent_z", "alpha", "verdict",
    }
    assert payload["final_score"] == (
        payload["acrostic"]["p_value"]
        * payload["sensorimotor"]["p_value"]
        * payload["redgreen"]["p_value"]
    )


# ---------------------------------------------------------------------------
# generation/detection agreement (the keystream replay contract at desk scale)


@pytest.mark.parametrize("setting", ["weak", "medium", "strong"])
def test_generation_detection_counters_agree(toy_model, lexicon, setting):
    d_senso, d_acro, d_redgreen = SETTINGS[setting]
    config = WatermarkConfig(
        delta_acro=d_acro, delta_senso=d_senso, delta_redgreen=d_redgreen,
        max_tokens=80, min_tokens=80, seed=hash(setting) % 1000,
    )
    text, trace = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    report = detect(text, lexicon, config.gamma, toy_model.vocabulary)
    assert report.acro.checks == trace.acro_checks
    assert report.acro.matches == trace.acro_matches
    assert report.senso.checks == trace.senso_checks
    assert report.senso.matches == trace.senso_matches
    assert report.redgreen.transitions == trace.transitions
    assert report.redgreen.green_count == trace.green_hits
    assert report.word_states == trace.word_states


def test_detection_is_deterministic(toy_model, lexicon):
    text = "The analyst saw the harbor. A bright crane turned slowly."
    a = detect(text, lexicon, 0.5, toy_model.vocabulary)
    b = detect(text, lexicon, 0.5, toy_model.vocabulary)
    assert a.to_json() == b.to_json()
