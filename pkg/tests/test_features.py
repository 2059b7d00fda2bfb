import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentagg.features import (
    FEATURE_LAYOUT_VERSION,
    N_FEATURES,
    feature_names,
    featurize,
    featurize_batch,
    write_features_csv,
)
from sentagg.scorer import ConstituentScore, ScoreMatrix, SentimentDistribution


def matrix_from(rows, passage_id="p"):
    return ScoreMatrix(
        passage_id,
        [
            ConstituentScore(f"c{i}", SentimentDistribution.from_values(r, renormalize=True))
            for i, r in enumerate(rows)
        ],
        "sentence",
    )


def brute_force_features(rows):
    """Independent pure-Python reimplementation used as the oracle."""
    n = len(rows)
    argmaxes = []
    for row in rows:
        best = 0
        for c in (1, 2):
            if row[c] > row[best]:
                best = c
        argmaxes.append(best)
    out = []
    for c in range(3):
        col = [row[c] for row in rows]
        mean = sum(col) / n
        lo, hi = min(col), max(col)
        std = math.sqrt(sum((x - mean) ** 2 for x in col) / n)
        out.extend([mean, lo, hi, std, hi - lo, float(sum(1 for a in argmaxes if a == c))])
    out.append(float(n))
    return out


def test_layout_constants():
    assert FEATURE_LAYOUT_VERSION == 1
    assert N_FEATURES == 19


def test_feature_names_layout():
    names = feature_names()
    assert len(names) == 19
    assert names[0] == "negative_mean"
    assert names[5] == "negative_argmax_count"
    assert names[6] == "neutral_mean"
    assert names[12] == "positive_mean"
    assert names[15] == "positive_std"
    assert names[18] == "n_constituents"


def test_single_row_degeneracy():
    v = featurize(matrix_from([(0.2, 0.3, 0.5)]))
    for c, value in enumerate((0.2, 0.3, 0.5)):
        mean, lo, hi, std, rng, count = v[6 * c : 6 * c + 6]
        assert mean == lo == hi == pytest.approx(value)
        assert std == 0.0
        assert rng == 0.0
        assert count == (1.0 if c == 2 else 0.0)
    assert v[18] == 1.0


def test_identical_rows_have_zero_spread():
    v = featurize(matrix_from([(0.6, 0.3, 0.1)] * 5))
    assert v[3] == v[9] == v[15] == 0.0  # stds
    assert v[4] == v[10] == v[16] == 0.0  # ranges
    assert v[5] == 5.0 and v[11] == 0.0 and v[17] == 0.0
    assert v[18] == 5.0


def test_hand_computed_two_rows():
    v = featurize(matrix_from([(0.8, 0.1, 0.1), (0.2, 0.3, 0.5)]))
    assert v[0] == pytest.approx(0.5)  # negative mean
    assert v[1] == pytest.approx(0.2)
    assert v[2] == pytest.approx(0.8)
    assert v[3] == pytest.approx(0.3)  # population std of {0.8, 0.2}
    assert v[4] == pytest.approx(0.6)
    assert v[5] == 1.0
    assert v[17] == 1.0  # one positive-argmax row
    assert v[18] == 2.0


def test_tie_breaks_to_lowest_class():
    # (0.4, 0.4, 0.2): negative wins; (0.3, 0.35, 0.35): neutral wins.
    v = featurize(matrix_from([(0.4, 0.4, 0.2), (0.3, 0.35, 0.35)]))
    assert v[5] == 1.0 and v[11] == 1.0 and v[17] == 0.0


def test_matches_brute_force_on_clause_fixture(clause_matrix):
    rows = [tuple(r) for r in clause_matrix.values()]
    np.testing.assert_allclose(
        featurize(clause_matrix), brute_force_features(rows), rtol=0, atol=1e-12
    )


def test_clause_fixture_structure(clause_matrix):
    v = featurize(clause_matrix)
    assert v[18] == 14.0
    assert (v[5], v[11], v[17]) == (3.0, 8.0, 3.0)
    assert v[0] == pytest.approx(2.9946 / 14, abs=1e-6)


def test_matches_brute_force_on_aspect_fixture(aspect_matrix):
    rows = [tuple(r) for r in aspect_matrix.values()]
    np.testing.assert_allclose(
        featurize(aspect_matrix), brute_force_features(rows), rtol=0, atol=1e-12
    )
    assert featurize(aspect_matrix)[18] == 19.0


row_strategy = st.tuples(
    st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0)
)


@settings(max_examples=200)
@given(st.lists(row_strategy, min_size=1, max_size=20))
def test_matches_brute_force_on_random_matrices(raw_rows):
    matrix = matrix_from(raw_rows)
    rows = [tuple(r) for r in matrix.values()]
    np.testing.assert_allclose(
        featurize(matrix), brute_force_features(rows), rtol=0, atol=1e-12
    )


@settings(max_examples=200)
@given(st.lists(row_strategy, min_size=1, max_size=20), st.randoms())
def test_row_permutation_invariance(raw_rows, rng):
    matrix = matrix_from(raw_rows)
    shuffled_rows = list(matrix.rows)
    rng.shuffle(shuffled_rows)
    shuffled = ScoreMatrix("p", shuffled_rows, "sentence")
    np.testing.assert_allclose(featurize(shuffled), featurize(matrix), rtol=0, atol=1e-12)


@settings(max_examples=100)
@given(st.lists(row_strategy, min_size=1, max_size=8), st.integers(2, 4))
def test_duplication_scales_counts_only(raw_rows, k):
    base = featurize(matrix_from(raw_rows))
    dup = featurize(matrix_from(raw_rows * k))
    for c in range(3):
        np.testing.assert_allclose(
            dup[6 * c : 6 * c + 5], base[6 * c : 6 * c + 5], rtol=0, atol=1e-12
        )
        assert dup[6 * c + 5] == base[6 * c + 5] * k
    assert dup[18] == base[18] * k


@settings(max_examples=200)
@given(st.lists(row_strategy, min_size=1, max_size=20))
def test_structural_invariants(raw_rows):
    v = featurize(matrix_from(raw_rows))
    assert v.shape == (19,)
    n = v[18]
    assert v[5] + v[11] + v[17] == n == len(raw_rows)
    for c in range(3):
        mean, lo, hi, std, rng, count = v[6 * c : 6 * c + 6]
        # the mean of identical values can land 1 ulp outside [min, max]
        assert 0.0 <= lo <= hi <= 1.0 + 1e-12
        assert lo - 1e-12 <= mean <= hi + 1e-12
        assert rng == pytest.approx(hi - lo, abs=1e-15)
        assert 0.0 <= std <= 0.5 + 1e-12
        assert count == int(count) and 0 <= count <= n


def test_featurize_batch_matches_single(clause_matrix, aspect_matrix):
    batch = featurize_batch([clause_matrix, aspect_matrix])
    assert batch.shape == (2, 19)
    np.testing.assert_array_equal(batch[0], featurize(clause_matrix))
    np.testing.assert_array_equal(batch[1], featurize(aspect_matrix))
    assert featurize_batch([]).shape == (0, 19)


def test_csv_dump_round_trips_exactly(tmp_path, clause_matrix):
    features = featurize(clause_matrix)
    path = tmp_path / "features.csv"
    write_features_csv(path, [("headphones-review", features, 2)])
    with path.open(newline="") as handle:
        header, row = list(csv.reader(handle))
    assert header == ["passage_id"] + [f"f{i}" for i in range(19)] + ["label"]
    assert row[0] == "headphones-review"
    assert row[-1] == "2"
    parsed = np.array([float(cell) for cell in row[1:-1]])
    np.testing.assert_array_equal(parsed, features)
