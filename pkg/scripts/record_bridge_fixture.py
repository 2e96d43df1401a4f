"""Record a 1,000-step logit-adjustment replay fixture for the bridge tests.

The fixture drives the TypeScript client end-to-end: for every step it
stores the text delta fed to the session, the raw input logits, the
adjusted logits produced by the in-process session, and the key state
after the feed. The bridge test replays the same deltas/logits through
the subprocess server and must match bit-for-bit (1e-9 per element).
"""

import json
import random
from pathlib import Path

from stylemark.bridge import StepSession
from stylemark.generation import EOT, UNK, WatermarkConfig, generate, train_toy_model
from stylemark.norms import load_class_frequencies, load_norms

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "bridge" / "test" / "fixtures" / "replay.json"

SEED = 20260826
STEPS = 1000


def build_vocabulary(model, size=96):
    """A compact vocabulary: frequent corpus words + punctuation + specials."""
    totals = {}
    for table in model.counts.values():
        for token_id, count in table.items():
            totals[token_id] = totals.get(token_id, 0) + count
    words = [
        model.vocabulary.tokens[token_id]
        for token_id, _ in sorted(totals.items(), key=lambda kv: -kv[1])
        if model.vocabulary.is_word(token_id)
    ]
    tokens = sorted(words[: size - 4]) + [".", ",", UNK, EOT]
    return tokens


def main() -> None:
    rng = random.Random(SEED)
    model = train_toy_model(ROOT / "fixtures" / "corpus.txt", order=2, smoothing=0.005)
    baselines = load_class_frequencies(ROOT / "fixtures" / "class_frequencies.csv")
    lexicon = load_norms(ROOT / "fixtures" / "lexicon.csv", baselines)

    config = WatermarkConfig(
        delta_acro=20.0, delta_senso=2.5, delta_redgreen=2.0, gamma=0.5,
        max_tokens=1200, min_tokens=1200, seed=SEED,
    )
    # a long generated completion supplies realistic deltas (words,
    # punctuation, sentence boundaries) for the session to consume
    _, trace = generate(
        model, "The analyst saw the bright harbor near the dock today.",
        config, lexicon,
    )
    assert len(trace.steps) >= STEPS, len(trace.steps)

    tokens = build_vocabulary(model)
    session = StepSession(config, tokens, lexicon)
    steps = []
    delta = ""
    for record in trace.steps[:STEPS]:
        logits = [round(rng.uniform(-8.0, 2.0), 6) for _ in range(len(tokens))]
        adjusted = session.step(logits, delta)
        steps.append({
            "delta": delta,
            "logits": logits,
            "adjusted": adjusted.tolist(),
            "state": {
                "senso_class": session.state.senso_class,
                "acro_letter": session.state.acro_letter,
            },
            "sentence_start": session.sentence_start,
        })
        token = record.token
        # words carry their trailing delimiter so the key updates at the
        # same step boundary as token-level generation
        delta = token + " " if model.vocabulary.is_word(record.token_id) else token

    OUT.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": {
            "delta_acro": config.delta_acro,
            "delta_senso": config.delta_senso,
            "delta_redgreen": config.delta_redgreen,
            "gamma": config.gamma,
        },
        "vocabulary": tokens,
        "norms_path": "../fixtures/lexicon.csv",
        "frequencies_path": "../fixtures/class_frequencies.csv",
        "steps": steps,
    }
    OUT.write_text(json.dumps(payload), encoding="utf-8")
    print(f"wrote {len(steps)} steps, vocab {len(tokens)}, to {OUT}")


if __name__ == "__main__":
    main()
