"""Ensemble text watermark: keyed acrostic, sensorimotor and red-green
logit biasing with a model-free statistical detector."""

from .attack import AttackConfig, paraphrase_attack
from .detection import DetectionReport, binomial_sf, detect, normal_sf, verdict
from .generation import (
    GenerationTrace,
    ToyModel,
    Vocabulary,
    WatermarkConfig,
    adjust_logits,
    generate,
    perplexity,
    train_toy_model,
)
from .harness import ExperimentSpec, ResultsTable, make_prompts, run_experiment
from .keystream import KeyState, init_key, update_on_sentence, update_on_word
from .norms import NormsLexicon, load_class_frequencies, load_norms
from .redgreen import green_list, is_green
from .textops import (
    HashRange,
    SentenceSpan,
    hash_to_range,
    normalize_sentence,
    split_sentences,
    split_words,
)

__version__ = "0.1.0"
