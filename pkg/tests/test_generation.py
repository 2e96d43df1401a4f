"""Toy model, tokenization, logit adjustment and watermarked generation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemark.generation import (
    EOT,
    UNK,
    GenerationError,
    ToyModel,
    Vocabulary,
    WatermarkConfig,
    adjust_logits,
    first_alpha,
    generate,
    perplexity,
    render,
    tokenize,
    train_toy_model,
)
from stylemark.keystream import KeyState
from stylemark.norms import CLASS_NAMES, NormsLexicon
from stylemark.redgreen import green_list

# ---------------------------------------------------------------------------
# tokenize / render


def test_tokenize_peels_outer_punctuation():
    assert tokenize('Hello, world!') == ["hello", ",", "world", "!"]
    assert tokenize('"Stop..." he said.') == ['"', "stop", ".", ".", ".", '"', "he", "said", "."]


def test_render_attaches_punct_left():
    assert render(["hello", ",", "world", "!"]) == "hello, world!"
    assert render([".", "start"]) == ". start"  # leading punct has nothing to join


def test_tokenize_render_round_trip_lowercase():
    text = "The dog ran. It sat down, then slept!"
    assert render(tokenize(text)) == text.lower()


@given(st.text(alphabet="abc .,!?", max_size=60))
def test_tokenize_render_round_trip_property(text):
    # render is not an exact inverse (it may detach leading punctuation),
    # but re-tokenizing the render must reproduce the token sequence
    tokens = tokenize(text)
    assert tokenize(render(tokens)) == tokens


def test_first_alpha():
    assert first_alpha("'twas") == "t"
    assert first_alpha("Cat") == "c"
    assert first_alpha("...") is None


# ---------------------------------------------------------------------------
# Vocabulary


def test_vocabulary_structure():
    vocab = Vocabulary(["apple", "bear", ".", UNK, EOT])
    assert vocab.size == 5
    assert vocab.is_word(0) and vocab.is_word(1)
    assert not vocab.is_word(2) and not vocab.is_word(3) and not vocab.is_word(4)
    assert vocab.id_for_word("Apple") == 0
    assert vocab.id_for_word("zebra") == vocab.unk_id
    assert vocab.letter_mask(0).tolist() == [True, False, False, False, False]
    assert vocab.letter_mask(1).tolist() == [False, True, False, False, False]


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValueError):
        Vocabulary(["a", "a"])


def test_class_mask(lexicon):
    vocab = Vocabulary(list(lexicon.entries)[:10] + [UNK, EOT])
    for token_id, token in enumerate(vocab.tokens[:10]):
        cls = lexicon.class_of(token)
        assert vocab.class_mask(lexicon, cls)[token_id]


# ---------------------------------------------------------------------------
# toy model


def _train_tmp(tmp_path, text, order=2, smoothing=1.0):
    path = tmp_path / "corpus.txt"
    path.write_text(text, encoding="utf-8")
    return train_toy_model(path, order=order, smoothing=smoothing)


def test_bigram_hand_count(tmp_path):
    model = _train_tmp(tmp_path, "a b a b a b")
    vocab = model.vocabulary
    assert vocab.tokens == ("a", "b", UNK, EOT)
    probs = np.exp(model.next_logits([vocab.index["a"]]))
    # counts after "a": b x3; add-1 smoothing over V=4 gives (3+1)/(3+4)
    assert probs[vocab.index["b"]] == pytest.approx(4 / 7, rel=1e-12)
    assert probs[vocab.index["a"]] == pytest.approx(1 / 7, rel=1e-12)
    probs_b = np.exp(model.next_logits([vocab.index["b"]]))
    # counts after "b": a x2, eot x1 (total 3); smoothed over V=4
    assert probs_b[vocab.index["a"]] == pytest.approx(3 / 7, rel=1e-12)
    assert probs_b[vocab.eot_id] == pytest.approx(2 / 7, rel=1e-12)


def test_unseen_context_uniform(tmp_path):
    model = _train_tmp(tmp_path, "a b a b a b")
    probs = np.exp(model.next_logits([model.vocabulary.unk_id]))
    assert np.allclose(probs, 0.25)


def test_logits_are_normalized_log_probs(tmp_path):
    model = _train_tmp(tmp_path, "a b c a b c")
    for context in ([], [0], [1], [2]):
        assert np.exp(model.next_logits(context)).sum() == pytest.approx(1.0, rel=1e-12)


def test_trigram_context_window(tmp_path):
    model = _train_tmp(tmp_path, "a b c a b d", order=3)
    vocab = model.vocabulary
    ids = [vocab.index["a"], vocab.index["b"]]
    probs = np.exp(model.next_logits([vocab.index["c"]] + ids))
    # after (a, b): c and d once each; V=6 types (a b c d unk eot)
    assert probs[vocab.index["c"]] == pytest.approx(2 / 8, rel=1e-12)
    assert probs[vocab.index["d"]] == pytest.approx(2 / 8, rel=1e-12)


def test_invalid_model_params(tmp_path):
    with pytest.raises(ValueError):
        _train_tmp(tmp_path, "a b", order=4)
    with pytest.raises(ValueError):
        _train_tmp(tmp_path, "a b", smoothing=0.0)
    with pytest.raises(ValueError):
        _train_tmp(tmp_path, "   \n  ")


def test_save_load_round_trip(tmp_path):
    model = _train_tmp(tmp_path, "a b a b c. d!")
    path = tmp_path / "model.json"
    model.save(path)
    loaded = ToyModel.load(path)
    assert loaded.vocabulary.tokens == model.vocabulary.tokens
    assert loaded.order == model.order and loaded.smoothing == model.smoothing
    for context in ([], [0], [1, 2]):
        assert np.array_equal(loaded.next_logits(context), model.next_logits(context))


def test_load_rejects_foreign_json(tmp_path):
    path = tmp_path / "bogus.json"
    path.write_text('{"hello": 1}', encoding="utf-8")
    with pytest.raises(ValueError, match="not a toy model"):
        ToyModel.load(path)


# ---------------------------------------------------------------------------
# perplexity


def test_perplexity_uniform_model_equals_vocab_size():
    vocab = Vocabulary(["a", "b", "c", UNK, EOT])
    model = ToyModel(vocab, {}, order=2, smoothing=1.0)
    assert perplexity(model, "a b c a") == pytest.approx(5.0, rel=1e-12)


def test_perplexity_hand_computed(tmp_path):
    model = _train_tmp(tmp_path, "a b a b a b")
    # "a b": P(a | empty) = 1/4 uniform, P(b | a) = 4/7
    expected = math.exp(-(math.log(1 / 4) + math.log(4 / 7)) / 2)
    assert perplexity(model, "a b") == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        perplexity(model, "   ")


# ---------------------------------------------------------------------------
# adjust_logits


def _uniform_lexicon(words_by_class):
    entries = {}
    for cls, words in words_by_class.items():
        for word in words:
            entries[word] = cls
    baselines = {c: 1.0 / len(CLASS_NAMES) for c in range(len(CLASS_NAMES))}
    return NormsLexicon(entries=entries, baselines=baselines)


def test_adjust_logits_zero_deltas_noop():
    vocab = Vocabulary([f"w{i}" for i in range(8)] + [UNK, EOT])
    logits = np.linspace(-3, 3, 10)
    out = adjust_logits(
        logits, KeyState(0, 0), True, "w0",
        WatermarkConfig(), None, vocab,
    )
    assert np.array_equal(out, logits)
    assert out is not logits  # fresh array, input untouched


def test_adjust_logits_independent_fixture():
    """32-token fixture checked against an independent in-test computation."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    tokens = [letters[i % 26] + f"tok{i}" for i in range(30)] + [UNK, EOT]
    vocab = Vocabulary(tokens)
    lexicon = _uniform_lexicon({3: [tokens[4], tokens[7]], 5: [tokens[9]]})
    config = WatermarkConfig(delta_acro=10.0, delta_senso=2.5, delta_redgreen=1.5, gamma=0.5)
    state = KeyState(senso_class=3, acro_letter=2)  # letter "c"
    logits = np.arange(32, dtype=float) * 0.1
    greens = set(green_list("the", 32, 0.5))
    assert sorted(greens) == [0, 2, 3, 5, 9, 13, 15, 16, 17, 18, 19, 20, 22, 23, 24, 26]

    # sentence start: acrostic branch + red-green, no sensorimotor boost
    out = adjust_logits(logits, state, True, "the", config, lexicon, vocab)
    for i, token in enumerate(tokens):
        expected = logits[i]
        if token not in (UNK, EOT) and token.startswith("c"):
            expected += 10.0
        if i in greens:
            expected += 1.5
        assert out[i] == pytest.approx(expected, abs=1e-15), token

    # mid-sentence: sensorimotor branch + red-green, no acrostic boost
    out = adjust_logits(logits, state, False, "the", config, lexicon, vocab)
    for i, token in enumerate(tokens):
        expected = logits[i]
        if lexicon.class_of(token) == 3:
            expected += 2.5
        if i in greens:
            expected += 1.5
        assert out[i] == pytest.approx(expected, abs=1e-15), token


def test_adjust_logits_respects_enabled_subset():
    vocab = Vocabulary([f"w{i}" for i in range(8)] + [UNK, EOT])
    logits = np.zeros(10)
    config = WatermarkConfig(
        delta_acro=5.0, delta_redgreen=2.0, enabled=frozenset(["redgreen"])
    )
    out = adjust_logits(logits, KeyState(0, 22), True, "w0", config, None, vocab)
    greens = set(green_list("w0", 10, 0.5))
    assert {i for i in range(10) if out[i] == 2.0} == greens
    assert all(out[i] == 0.0 for i in range(10) if i not in greens)


def test_adjust_logits_length_mismatch():
    vocab = Vocabulary(["a", "b"])
    with pytest.raises(ValueError, match="vocabulary size"):
        adjust_logits(np.zeros(3), KeyState(0, 0), True, "", WatermarkConfig(), None, vocab)


# ---------------------------------------------------------------------------
# config validation


def test_watermark_config_validation():
    with pytest.raises(ValueError):
        WatermarkConfig(enabled=frozenset(["acro", "mystery"]))
    with pytest.raises(ValueError):
        WatermarkConfig(gamma=0.0)
    with pytest.raises(ValueError):
        WatermarkConfig(sampler="beam")


# ---------------------------------------------------------------------------
# generate


def test_generate_deterministic(toy_model, lexicon):
    config = WatermarkConfig(
        delta_acro=20.0, delta_senso=2.5, delta_redgreen=2.0,
        max_tokens=60, min_tokens=60, seed=11,
    )
    prompt = "The quiet analyst saw the bright harbor."
    first, trace_a = generate(toy_model, prompt, config, lexicon)
    second, trace_b = generate(toy_model, prompt, config, lexicon)
    assert first == second
    assert trace_a.word_states == trace_b.word_states
    assert first  # non-empty completion


def test_generate_seed_changes_output(toy_model, lexicon):
    base = dict(delta_redgreen=2.0, max_tokens=60, min_tokens=60)
    prompt = "The quiet analyst saw the bright harbor."
    a, _ = generate(toy_model, prompt, WatermarkConfig(seed=1, **base), lexicon)
    b, _ = generate(toy_model, prompt, WatermarkConfig(seed=2, **base), lexicon)
    assert a != b


def test_min_tokens_forces_length(toy_model, lexicon):
    config = WatermarkConfig(max_tokens=40, min_tokens=40, seed=3)
    _, trace = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    assert len(trace.steps) == 40
    assert all(s.token != EOT and s.token != UNK for s in trace.steps)


def test_greedy_sampler_is_argmax(toy_model, lexicon):
    config = WatermarkConfig(sampler="greedy", max_tokens=20, min_tokens=20, seed=0)
    a, _ = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    b, _ = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    assert a == b


def test_huge_acro_delta_dominates_sentence_starts(toy_model, lexicon):
    config = WatermarkConfig(
        delta_acro=1e6, enabled=frozenset(["acro"]),
        max_tokens=80, min_tokens=80, seed=5,
    )
    _, trace = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    starts = [s for s in trace.steps if s.sentence_start]
    assert len(starts) >= 2
    for record in starts:
        token = record.token
        assert first_alpha(token) == chr(ord("a") + record.acro_letter)
    # and the detector-mirroring counter agrees (first sentence is unchecked)
    assert trace.acro_checks == trace.acro_matches


def test_generate_wraps_model_failures(lexicon):
    class Broken:
        vocabulary = Vocabulary(["a", UNK, EOT])

        def next_logits(self, context):
            raise RuntimeError("boom")

    with pytest.raises(GenerationError, match="step 0"):
        generate(Broken(), "a", WatermarkConfig(max_tokens=5), lexicon)


def test_trace_jsonl_shape(toy_model, lexicon):
    config = WatermarkConfig(delta_redgreen=2.0, max_tokens=10, min_tokens=10, seed=7)
    _, trace = generate(toy_model, "The analyst saw the harbor.", config, lexicon)
    lines = trace.to_jsonl().splitlines()
    assert len(lines) == 10
    import json

    record = json.loads(lines[0])
    assert {"step", "token", "token_id", "senso_class", "acro_letter"} <= set(record)
