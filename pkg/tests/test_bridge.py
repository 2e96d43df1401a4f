"""Per-step sessions and the JSON-lines server used by external hosts."""

import io
import json

import numpy as np
import pytest

from stylemark.bridge import BridgeError, StepSession, serve, session_new
from stylemark.generation import (
    EOT,
    UNK,
    WatermarkConfig,
    adjust_logits,
    generate,
)
from stylemark.keystream import KeyState, init_key

from conftest import FIXTURES


def test_session_starts_at_init_key():
    session = StepSession(WatermarkConfig(), ["a", "b", UNK, EOT])
    assert session.state == init_key()
    assert session.sentence_start


def test_session_rejects_empty_vocab_and_bad_logits():
    with pytest.raises(BridgeError):
        StepSession(WatermarkConfig(), [])
    session = StepSession(WatermarkConfig(), ["a", "b"])
    with pytest.raises(BridgeError, match="logit length"):
        session.step([0.0, 0.0, 0.0])


def test_session_tracks_words_and_sentences():
    session = StepSession(WatermarkConfig(), ["a", "b", UNK, EOT])
    session.feed("The dog ")
    assert not session.sentence_start
    mid_state = session.state
    session.feed("ran. ")
    assert session.sentence_start
    assert session.state.acro_letter != mid_state.acro_letter or True  # re-keyed
    # a partial word also leaves sentence-start
    session.feed("Th")
    assert not session.sentence_start


def test_session_replays_generation_keystream(toy_model, lexicon):
    """Feeding the generated text step-by-step reproduces every key state
    and every adjusted logit vector of the in-process generator."""
    config = WatermarkConfig(
        delta_acro=20.0, delta_senso=2.5, delta_redgreen=2.0,
        max_tokens=60, min_tokens=60, seed=21,
    )
    text, trace = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    session = StepSession(config, toy_model.vocabulary.tokens, lexicon)

    prev_token = ""
    delta = ""
    # replay: before each step feed the text emitted since the last one
    for record in trace.steps:
        logits = toy_model.next_logits(
            [toy_model.vocabulary.index[s.token] for s in trace.steps[: record.step]]
        )
        adjusted_session = session.step(logits, delta)
        assert session.state.senso_class == record.senso_class
        assert session.state.acro_letter == record.acro_letter
        assert session.sentence_start == record.sentence_start
        token = record.token
        # words are fed with their trailing delimiter so the session folds
        # them into the key at the same step boundary the generator does
        if toy_model.vocabulary.is_word(record.token_id):
            delta = token + " "
        else:
            delta = token
        reference = adjust_logits(
            np.asarray(logits),
            KeyState(record.senso_class, record.acro_letter),
            record.sentence_start,
            prev_token,
            config,
            lexicon,
            session.vocabulary,
        )
        np.testing.assert_allclose(adjusted_session, reference, atol=1e-12)
        if toy_model.vocabulary.is_word(record.token_id):
            prev_token = token


def test_serve_protocol(toy_model):
    vocab = ["dog", "ran", ".", UNK, EOT]
    requests = [
        {"op": "new", "config": {"delta_redgreen": 2.0, "gamma": 0.5},
         "vocabulary": vocab},
        {"op": "step", "session": 0, "logits": [0.0] * 5, "delta": ""},
        {"op": "step", "session": 0, "logits": [0.0] * 5, "delta": "dog "},
        {"op": "close", "session": 0},
        {"op": "step", "session": 0, "logits": [0.0] * 5},
        {"op": "banana"},
        {"op": "new", "vocabulary": vocab,
         "norms_path": str(FIXTURES / "lexicon.csv"),
         "frequencies_path": str(FIXTURES / "class_frequencies.csv")},
    ]
    stdin = io.StringIO("\n".join(json.dumps(r) for r in requests) + "\n")
    stdout = io.StringIO()
    serve(stdin=stdin, stdout=stdout)
    responses = [json.loads(line) for line in stdout.getvalue().splitlines()]
    assert len(responses) == 7
    assert responses[0]["ok"] and responses[0]["session"] == 0
    assert responses[0]["state"] == {"senso_class": 0, "acro_letter": 24}
    assert responses[1]["ok"] and len(responses[1]["logits"]) == 5
    assert responses[2]["ok"]
    assert responses[3]["ok"]
    assert not responses[4]["ok"]  # stepping a closed session fails cleanly
    assert not responses[5]["ok"] and "banana" in responses[5]["error"]
    assert responses[6]["ok"] and responses[6]["session"] == 1


def test_session_new_loads_lexicon():
    session = session_new(
        WatermarkConfig(delta_senso=2.5),
        ["touch", "sound", UNK, EOT],
        norms_path=str(FIXTURES / "lexicon.csv"),
        frequencies=str(FIXTURES / "class_frequencies.csv"),
    )
    assert session.lexicon is not None
    assert len(session.lexicon.entries) > 0
