from pathlib import Path

import pytest

from sentagg import load_dataset, load_score_matrices

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def clause_matrix():
    """The 14-row clause-level score matrix for the headphones review."""
    return load_score_matrices(DATA / "clause_scores.jsonl")["headphones-review"]


@pytest.fixture(scope="session")
def aspect_matrix():
    """The 19-row aspect-level score matrix for the headphones review."""
    return load_score_matrices(DATA / "aspect_scores.jsonl")["headphones-review"]


@pytest.fixture(scope="session")
def toy_passages():
    return load_dataset(DATA / "toy.jsonl")
