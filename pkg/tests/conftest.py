"""Shared fixtures: the fixture corpus, lexicon and a trained toy model."""

from pathlib import Path

import pytest

from stylemark.generation import train_toy_model
from stylemark.norms import load_class_frequencies, load_norms

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
TEST_DATA = Path(__file__).resolve().parent / "data"

# Smoothing small enough that the n-gram structure survives strong boosts;
# the shipped experiment scripts use the same value.
TOY_SMOOTHING = 0.005


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return FIXTURES / "corpus.txt"


@pytest.fixture(scope="session")
def lexicon():
    baselines = load_class_frequencies(FIXTURES / "class_frequencies.csv")
    return load_norms(FIXTURES / "lexicon.csv", baselines)


@pytest.fixture(scope="session")
def toy_model(corpus_path):
    return train_toy_model(corpus_path, order=2, smoothing=TOY_SMOOTHING)
