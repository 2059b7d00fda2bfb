import json
import math

import numpy as np
import pytest

from sentagg.aggregate import (
    AWON_NEUTRAL_THRESHOLD,
    STRATEGIES,
    Prediction,
    aggregate_average,
    aggregate_awon,
    load_predictions,
    predict,
    predict_all,
    write_predictions,
)
from sentagg.mlp import MlpHyperparams, MlpModel, ModelError
from sentagg.scorer import (
    ConstituentScore,
    ScoreMatrix,
    ScoreMatrixError,
    SentimentDistribution,
)


def matrix_from(rows, passage_id="p"):
    return ScoreMatrix(
        passage_id,
        [ConstituentScore(f"c{i}", SentimentDistribution(*r)) for i, r in enumerate(rows)],
        "sentence",
    )


def bias_model(b2, hidden=4):
    """All-zero weights: the network's output is softmax(b2) for any input."""
    return MlpModel(
        W1=np.zeros((hidden, 19)),
        b1=np.zeros(hidden),
        W2=np.zeros((3, hidden)),
        b2=np.asarray(b2, dtype=float),
        feature_means=np.zeros(19),
        feature_stds=np.ones(19),
        hyperparams=MlpHyperparams(hidden_size=hidden, early_stop_tolerance=1e-4, patience_epochs=1),
    )


def test_module_constants():
    assert STRATEGIES == ("average", "awon", "mlp")
    assert AWON_NEUTRAL_THRESHOLD == 0.9


class TestAverage:
    def test_hand_example(self):
        dist = aggregate_average(matrix_from([(0.8, 0.1, 0.1), (0.2, 0.3, 0.5)]))
        assert dist.as_tuple() == pytest.approx((0.5, 0.2, 0.3), abs=1e-12)

    def test_single_row_is_identity(self):
        dist = aggregate_average(matrix_from([(0.7, 0.2, 0.1)]))
        assert dist.as_tuple() == pytest.approx((0.7, 0.2, 0.1), abs=1e-12)

    def test_clause_fixture(self, clause_matrix):
        dist = aggregate_average(clause_matrix)
        assert dist.as_tuple() == pytest.approx((0.2139, 0.565836, 0.220264), abs=1e-3)
        pred = predict(clause_matrix, "average")
        assert pred.label == 1
        assert pred.fallback is False


class TestAwon:
    def test_clause_fixture_flips_to_positive(self, clause_matrix):
        retained = int((clause_matrix.values()[:, 1] <= 0.9).sum())
        assert retained == 6
        dist, fallback = aggregate_awon(clause_matrix)
        assert fallback is False
        assert dist.as_tuple() == pytest.approx((0.496267, 0.003717, 0.500017), abs=1e-3)
        pred = predict(clause_matrix, "awon")
        assert pred.label == 2

    def test_boundary_row_is_retained(self):
        # Exclusion is strict: neutral == threshold stays in the average.
        boundary = (0.05, 0.9, 0.05)
        clearly_neutral = (0.005, 0.99, 0.005)
        dist, fallback = aggregate_awon(matrix_from([boundary, clearly_neutral]))
        assert fallback is False
        assert dist.as_tuple() == pytest.approx(boundary, abs=1e-12)

    def test_barely_above_threshold_is_excluded(self):
        opinionless = (0.05 - 5e-10, 0.9 + 1e-9, 0.05 - 5e-10)
        polar = (0.7, 0.1, 0.2)
        dist, fallback = aggregate_awon(matrix_from([opinionless, polar]))
        assert fallback is False
        assert dist.as_tuple() == pytest.approx(polar, abs=1e-12)

    def test_all_opinionless_falls_back_to_average(self):
        matrix = matrix_from([(0.02, 0.96, 0.02), (0.01, 0.98, 0.01)])
        dist, fallback = aggregate_awon(matrix)
        assert fallback is True
        assert dist == aggregate_average(matrix)
        pred = predict(matrix, "awon")
        assert pred.fallback is True
        assert pred.label == 1

    def test_threshold_one_equals_average(self, clause_matrix):
        dist, fallback = aggregate_awon(clause_matrix, threshold=1.0)
        assert fallback is False
        assert dist.as_tuple() == pytest.approx(
            aggregate_average(clause_matrix).as_tuple(), abs=1e-12
        )

    def test_threshold_zero_drops_everything(self, clause_matrix):
        dist, fallback = aggregate_awon(clause_matrix, threshold=0.0)
        assert fallback is True
        assert dist == aggregate_average(clause_matrix)


class TestPredict:
    def test_label_ties_break_to_lowest_class(self):
        assert predict(matrix_from([(0.4, 0.4, 0.2)]), "average").label == 0
        assert predict(matrix_from([(0.2, 0.4, 0.4)]), "average").label == 1

    def test_unknown_strategy(self, clause_matrix):
        with pytest.raises(ValueError, match="unknown strategy 'median'"):
            predict(clause_matrix, "median")

    def test_mlp_requires_model(self, clause_matrix):
        with pytest.raises(ValueError, match="requires a trained model"):
            predict(clause_matrix, "mlp")

    def test_mlp_uniform_model_ties_to_negative(self, clause_matrix):
        pred = predict(clause_matrix, "mlp", model=bias_model([0.0, 0.0, 0.0]))
        assert pred.scores.as_tuple() == pytest.approx((1 / 3,) * 3, abs=1e-12)
        assert pred.label == 0

    def test_mlp_bias_model_hand_softmax(self, clause_matrix):
        pred = predict(clause_matrix, "mlp", model=bias_model([0.0, 0.0, 1.0]))
        denom = 2.0 + math.e
        assert pred.scores.as_tuple() == pytest.approx(
            (1 / denom, 1 / denom, math.e / denom), abs=1e-12
        )
        assert pred.label == 2
        assert pred.strategy == "mlp"
        assert pred.fallback is False

    def test_mlp_rejects_wrong_feature_layout(self, clause_matrix):
        model = bias_model([0.0, 0.0, 1.0])
        model.feature_layout_version = 99
        with pytest.raises(ModelError, match="feature layout 99"):
            predict(clause_matrix, "mlp", model=model)

    def test_predict_all_preserves_order(self):
        matrices = [matrix_from([(0.8, 0.1, 0.1)], "a"), matrix_from([(0.1, 0.1, 0.8)], "b")]
        preds = predict_all(matrices, "average")
        assert [p.passage_id for p in preds] == ["a", "b"]
        assert [p.label for p in preds] == [0, 2]


class TestPredictionsIo:
    def make_predictions(self, clause_matrix):
        return [
            predict(clause_matrix, "average"),
            predict(clause_matrix, "awon"),
        ]

    def test_round_trip_is_exact(self, tmp_path, clause_matrix):
        preds = self.make_predictions(clause_matrix)
        path = tmp_path / "preds.jsonl"
        write_predictions(path, preds)
        assert load_predictions(path) == preds

    def test_wire_format_fields(self, tmp_path, clause_matrix):
        path = tmp_path / "preds.jsonl"
        write_predictions(path, self.make_predictions(clause_matrix))
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["strategy"] for r in records] == ["average", "awon"]
        for record in records:
            assert set(record) == {"passage_id", "strategy", "scores", "label", "fallback"}
            assert len(record["scores"]) == 3

    def write_record(self, tmp_path, **overrides):
        record = {
            "passage_id": "p",
            "strategy": "average",
            "scores": [0.2, 0.3, 0.5],
            "label": 2,
        }
        record.update(overrides)
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps(record) + "\n")
        return path

    def test_label_out_of_domain(self, tmp_path):
        path = self.write_record(tmp_path, label=3)
        with pytest.raises(ScoreMatrixError, match="label must be 0, 1, or 2"):
            load_predictions(path)

    def test_bool_label_rejected(self, tmp_path):
        path = self.write_record(tmp_path, label=True)
        with pytest.raises(ScoreMatrixError, match="label"):
            load_predictions(path)

    def test_unknown_strategy_rejected(self, tmp_path):
        path = self.write_record(tmp_path, strategy="vote")
        with pytest.raises(ScoreMatrixError, match="unknown strategy 'vote'"):
            load_predictions(path)

    def test_wrong_scores_arity(self, tmp_path):
        path = self.write_record(tmp_path, scores=[0.5, 0.5])
        with pytest.raises(ScoreMatrixError, match="3 finite numbers"):
            load_predictions(path)

    def test_scores_renormalized_on_load(self, tmp_path):
        path = self.write_record(tmp_path, scores=[0.2, 0.2, 0.2], label=0)
        (pred,) = load_predictions(path)
        assert pred.scores.as_tuple() == pytest.approx((1 / 3,) * 3)

    def test_zero_scores_rejected(self, tmp_path):
        path = self.write_record(tmp_path, scores=[0.0, 0.0, 0.0])
        with pytest.raises(ScoreMatrixError, match="cannot normalize"):
            load_predictions(path)

    def test_missing_field_reports_line(self, tmp_path):
        record = {"passage_id": "p", "strategy": "average", "scores": [0.2, 0.3, 0.5]}
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(ScoreMatrixError, match=r"preds\.jsonl:1.*'label'"):
            load_predictions(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScoreMatrixError, match="not found"):
            load_predictions(tmp_path / "absent.jsonl")

    def test_fallback_defaults_false(self, tmp_path):
        path = self.write_record(tmp_path)
        (pred,) = load_predictions(path)
        assert pred.fallback is False
