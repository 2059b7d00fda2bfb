import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentagg.mlp import (
    MODEL_FORMAT_VERSION,
    GridCell,
    HyperparamGrid,
    MlpHyperparams,
    MlpModel,
    ModelError,
    _init_params,
    grid_search,
    load_model,
    loss_and_grad,
    save_model,
    train,
    write_grid_csv,
)

HP = MlpHyperparams(hidden_size=4, early_stop_tolerance=1e-4, patience_epochs=5)


def zero_model(hidden=4, hp=None):
    return MlpModel(
        W1=np.zeros((hidden, 19)),
        b1=np.zeros(hidden),
        W2=np.zeros((3, hidden)),
        b2=np.zeros(3),
        feature_means=np.zeros(19),
        feature_stds=np.ones(19),
        hyperparams=hp or MlpHyperparams(hidden_size=hidden, early_stop_tolerance=1e-4, patience_epochs=5),
    )


def random_model(hidden, rng, scale=0.5):
    model = zero_model(hidden)
    model.W1 = rng.normal(0, scale, (hidden, 19))
    model.b1 = rng.normal(0, scale, hidden)
    model.W2 = rng.normal(0, scale, (3, hidden))
    model.b2 = rng.normal(0, scale, 3)
    return model


def blobs(n_per_class, rng, spread=0.3):
    """Linearly separable 3-class point clouds in feature space."""
    examples = []
    for c in range(3):
        center = np.zeros(19)
        center[c] = 2.0
        center[18] = 5.0 + c
        for _ in range(n_per_class):
            examples.append((center + rng.normal(0, spread, 19), c))
    return examples


class TestForward:
    def test_hand_computed_network(self):
        model = zero_model(hidden=2)
        model.W1 = np.zeros((2, 19))
        model.W1[0, 0] = 1.0
        model.W1[1, 1] = -1.0
        model.b1 = np.array([0.5, 0.25])
        model.W2 = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        model.b2 = np.array([0.0, 0.1, 0.2])
        x = np.zeros(19)
        x[0], x[1] = 2.0, 3.0
        # pre = (2.5, -2.75) -> relu -> (2.5, 0); logits = (2.5, 0.1, 1.45)
        logits = [2.5, 0.1, 1.45]
        denom = sum(math.exp(v) for v in logits)
        expected = [math.exp(v) / denom for v in logits]
        np.testing.assert_allclose(model.forward(x), expected, rtol=0, atol=1e-12)

    def test_relu_clamps_negative_preactivations(self):
        model = zero_model(hidden=2)
        model.W1[0, 0] = 1.0
        model.W1[1, 0] = 1.0
        model.W2 = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        x = np.zeros(19)
        x[0] = -3.0  # both hidden units cut off; logits all zero
        np.testing.assert_allclose(model.forward(x), [1 / 3] * 3, rtol=0, atol=1e-12)

    def test_bias_shift_invariance(self):
        rng = np.random.default_rng(0)
        model = random_model(6, rng)
        X = rng.normal(0, 1, (10, 19))
        base = model.predict_proba(X)
        model.b2 = model.b2 + 7.5
        np.testing.assert_allclose(model.predict_proba(X), base, rtol=0, atol=1e-12)

    def test_standardization_matches_explicit(self):
        rng = np.random.default_rng(1)
        scaled = random_model(5, rng)
        scaled.feature_means = rng.normal(0, 2, 19)
        scaled.feature_stds = rng.uniform(0.5, 3, 19)
        plain = zero_model(5)
        plain.W1, plain.b1 = scaled.W1, scaled.b1
        plain.W2, plain.b2 = scaled.W2, scaled.b2
        X = rng.normal(0, 1, (8, 19))
        Z = (X - scaled.feature_means) / scaled.feature_stds
        np.testing.assert_allclose(
            scaled.predict_proba(X), plain.predict_proba(Z), rtol=0, atol=1e-12
        )

    def test_rows_are_distributions(self):
        rng = np.random.default_rng(2)
        model = random_model(8, rng, scale=2.0)
        proba = model.predict_proba(rng.normal(0, 5, (40, 19)))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
        assert (proba >= 0).all()

    def test_extreme_logits_stay_finite(self):
        model = zero_model(hidden=1)
        model.W1[0, 0] = 1.0
        model.W2 = np.array([[1000.0], [0.0], [0.0]])
        x = np.zeros(19)
        x[0] = 1.0
        out = model.forward(x)
        assert np.isfinite(out).all()
        assert out[0] == pytest.approx(1.0)

    def test_predict_ties_break_low(self):
        model = zero_model()
        X = np.zeros((3, 19))
        np.testing.assert_array_equal(model.predict(X), [0, 0, 0])

    def test_input_shape_errors(self):
        model = zero_model()
        with pytest.raises(ModelError, match="19"):
            model.predict_proba(np.zeros((2, 7)))
        with pytest.raises(ModelError, match="19"):
            model.forward(np.zeros(7))


class TestModelValidation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ModelError, match="W1"):
            MlpModel(
                W1=np.zeros((3, 18)),
                b1=np.zeros(3),
                W2=np.zeros((3, 3)),
                b2=np.zeros(3),
                feature_means=np.zeros(19),
                feature_stds=np.ones(19),
                hyperparams=MlpHyperparams(hidden_size=3, early_stop_tolerance=1e-4, patience_epochs=1),
            )

    def test_nonpositive_stds_rejected(self):
        with pytest.raises(ModelError, match="strictly positive"):
            model = zero_model()
            model.feature_stds = np.zeros(19)
            model.__post_init__()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hidden_size": 0},
            {"early_stop_tolerance": 0.0},
            {"early_stop_tolerance": -1e-3},
            {"patience_epochs": 0},
            {"learning_rate": 0.0},
            {"batch_size": 0},
            {"max_epochs": 0},
        ],
    )
    def test_bad_hyperparams(self, kwargs):
        base = dict(hidden_size=8, early_stop_tolerance=1e-4, patience_epochs=5)
        base.update(kwargs)
        with pytest.raises(ModelError):
            MlpHyperparams(**base)


class TestInit:
    def test_glorot_bounds_and_zero_biases(self):
        rng = np.random.Generator(np.random.Philox(0))
        params = _init_params(64, rng)
        limit1 = math.sqrt(6.0 / (19 + 64))
        limit2 = math.sqrt(6.0 / (64 + 3))
        assert params["W1"].shape == (64, 19)
        assert np.abs(params["W1"]).max() <= limit1
        assert np.abs(params["W2"]).max() <= limit2
        assert np.unique(params["W1"]).size > 1  # actually varied, not constant
        np.testing.assert_array_equal(params["b1"], np.zeros(64))
        np.testing.assert_array_equal(params["b2"], np.zeros(3))

    def test_same_seed_same_init(self):
        a = _init_params(8, np.random.Generator(np.random.Philox(3)))
        b = _init_params(8, np.random.Generator(np.random.Philox(3)))
        for name in ("W1", "b1", "W2", "b2"):
            np.testing.assert_array_equal(a[name], b[name])


class TestLossAndGrad:
    def test_zero_network_loss_is_ln3(self):
        model = zero_model()
        rng = np.random.default_rng(3)
        batch = [(rng.normal(0, 1, 19), int(c)) for c in (0, 1, 2, 1)]
        loss, _ = loss_and_grad(model, batch)
        assert loss == pytest.approx(math.log(3.0), abs=1e-12)

    def test_duplicated_batch_same_loss_and_grads(self):
        rng = np.random.default_rng(4)
        model = random_model(5, rng)
        batch = [(rng.normal(0, 1, 19), int(rng.integers(3))) for _ in range(6)]
        loss1, grads1 = loss_and_grad(model, batch)
        loss2, grads2 = loss_and_grad(model, batch + batch)
        assert loss1 == pytest.approx(loss2, abs=1e-12)
        for name in grads1:
            np.testing.assert_allclose(grads1[name], grads2[name], rtol=0, atol=1e-12)

    def test_gradient_shapes(self):
        rng = np.random.default_rng(5)
        model = random_model(7, rng)
        _, grads = loss_and_grad(model, [(rng.normal(0, 1, 19), 1)])
        assert grads["W1"].shape == (7, 19)
        assert grads["b1"].shape == (7,)
        assert grads["W2"].shape == (3, 7)
        assert grads["b2"].shape == (3,)

    def test_empty_batch_rejected(self):
        with pytest.raises(ModelError, match="non-empty"):
            loss_and_grad(zero_model(), [])

    def test_bad_label_rejected(self):
        with pytest.raises(ModelError, match="labels"):
            loss_and_grad(zero_model(), [(np.zeros(19), 3)])

    def test_finite_differences_every_component(self):
        # Keep all relu pre-activations away from the kink so central
        # differences never straddle it; scan seeds until one qualifies.
        for seed in range(12, 48):
            rng = np.random.default_rng(seed)
            model = random_model(3, rng)
            X = rng.normal(0, 1.0, (6, 19))
            pre = X @ model.W1.T + model.b1
            if np.abs(pre).min() > 2e-2:
                break
        else:
            pytest.fail("no kink-free configuration found")
        y = [0, 1, 2, 0, 1, 2]
        batch = [(X[i], y[i]) for i in range(6)]
        _, grads = loss_and_grad(model, batch)
        eps = 1e-5
        worst = 0.0
        for name in ("W1", "b1", "W2", "b2"):
            arr = getattr(model, name)
            for idx in np.ndindex(arr.shape):
                original = arr[idx]
                arr[idx] = original + eps
                up, _ = loss_and_grad(model, batch)
                arr[idx] = original - eps
                down, _ = loss_and_grad(model, batch)
                arr[idx] = original
                fd = (up - down) / (2 * eps)
                analytic = grads[name][idx]
                if abs(fd) < 1e-8 and abs(analytic) < 1e-8:
                    continue
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic))
                worst = max(worst, rel)
        assert worst < 1e-4


class TestTrain:
    def test_loss_decreases(self):
        rng = np.random.default_rng(6)
        data = blobs(20, rng)
        hp = MlpHyperparams(
            hidden_size=8, early_stop_tolerance=1e-4, patience_epochs=50, max_epochs=10, seed=1
        )
        model = train(data, blobs(5, rng), hp)
        losses = [entry[1] for entry in model.training_history]
        assert losses[-1] < losses[0]

    def test_learns_separable_data(self):
        rng = np.random.default_rng(7)
        train_set = blobs(30, rng)
        val_set = blobs(10, rng)
        hp = MlpHyperparams(
            hidden_size=16,
            early_stop_tolerance=1e-3,
            patience_epochs=20,
            learning_rate=0.01,
            batch_size=16,
            max_epochs=150,
            seed=2,
        )
        model = train(train_set, val_set, hp)
        X_val = np.array([x for x, _ in val_set])
        y_val = np.array([y for _, y in val_set])
        assert (model.predict(X_val) == y_val).mean() >= 0.95

    def test_history_epochs_start_at_one(self):
        rng = np.random.default_rng(8)
        model = train(
            blobs(10, rng),
            blobs(4, rng),
            MlpHyperparams(hidden_size=4, early_stop_tolerance=1e-4, patience_epochs=3, max_epochs=5),
        )
        epochs = [e for e, _, _ in model.training_history]
        assert epochs == list(range(1, len(epochs) + 1))

    def test_early_stopping_bounds_epochs_past_best(self):
        rng = np.random.default_rng(9)
        patience = 3
        hp = MlpHyperparams(
            hidden_size=8,
            early_stop_tolerance=1e-4,
            patience_epochs=patience,
            max_epochs=100,
            seed=3,
        )
        model = train(blobs(20, rng), blobs(8, rng), hp)
        accs = [a for _, _, a in model.training_history]
        best_epoch = accs.index(max(accs)) + 1
        assert len(model.training_history) <= best_epoch + patience
        assert len(model.training_history) < hp.max_epochs  # actually stopped early

    def test_returned_weights_are_best_epoch(self):
        rng = np.random.default_rng(10)
        val_set = blobs(8, rng)
        hp = MlpHyperparams(
            hidden_size=8, early_stop_tolerance=1e-4, patience_epochs=4, max_epochs=60, seed=4
        )
        model = train(blobs(20, rng), val_set, hp)
        X_val = np.array([x for x, _ in val_set])
        y_val = np.array([y for _, y in val_set])
        returned_acc = float((model.predict(X_val) == y_val).mean())
        best_acc = max(a for _, _, a in model.training_history)
        assert returned_acc == pytest.approx(best_acc)

    def test_determinism_same_seed(self):
        rng = np.random.default_rng(11)
        train_set = blobs(15, rng)
        val_set = blobs(5, rng)
        hp = MlpHyperparams(
            hidden_size=8, early_stop_tolerance=1e-3, patience_epochs=5, max_epochs=15, seed=42
        )
        a = train(train_set, val_set, hp)
        b = train(train_set, val_set, hp)
        for name in ("W1", "b1", "W2", "b2", "feature_means", "feature_stds"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
        assert a.training_history == b.training_history

    def test_different_seed_differs(self):
        rng = np.random.default_rng(11)
        train_set = blobs(15, rng)
        val_set = blobs(5, rng)

        def run(seed):
            return train(
                train_set,
                val_set,
                MlpHyperparams(
                    hidden_size=8,
                    early_stop_tolerance=1e-3,
                    patience_epochs=5,
                    max_epochs=5,
                    seed=seed,
                ),
            )

        assert not np.array_equal(run(1).W1, run(2).W1)

    def test_batch_size_defaults_to_min_200(self):
        rng = np.random.default_rng(13)
        small = train(
            blobs(4, rng),
            blobs(2, rng),
            MlpHyperparams(hidden_size=4, early_stop_tolerance=1e-4, patience_epochs=2, max_epochs=2),
        )
        assert small.hyperparams.batch_size == 12
        big = train(
            blobs(80, rng),  # 240 examples
            blobs(2, rng),
            MlpHyperparams(hidden_size=4, early_stop_tolerance=1e-4, patience_epochs=2, max_epochs=2),
        )
        assert big.hyperparams.batch_size == 200

    def test_std_clamp_handles_constant_feature(self):
        rng = np.random.default_rng(14)
        data = []
        for c in range(3):
            for _ in range(10):
                x = np.zeros(19)
                x[c] = 2.0 + rng.normal(0, 0.1)
                x[18] = 7.0  # exactly constant across the set
                data.append((x, c))
        model = train(
            data,
            data[:6],
            MlpHyperparams(hidden_size=4, early_stop_tolerance=1e-4, patience_epochs=2, max_epochs=3),
        )
        assert np.isfinite(model.feature_stds).all()
        assert (model.feature_stds > 0).all()
        assert np.isfinite(model.predict_proba(np.array([data[0][0]]))).all()

    def test_single_class_train_set_rejected(self):
        rng = np.random.default_rng(15)
        data = [(rng.normal(0, 1, 19), 1) for _ in range(10)]
        with pytest.raises(ModelError, match="2 distinct labels"):
            train(data, data, HP)

    def test_empty_sets_rejected(self):
        rng = np.random.default_rng(16)
        data = blobs(2, rng)
        with pytest.raises(ModelError, match="train"):
            train([], data, HP)
        with pytest.raises(ModelError, match="validation"):
            train(data, [], HP)

    def test_wrong_feature_width_rejected(self):
        with pytest.raises(ModelError, match="19"):
            train([(np.zeros(7), 0), (np.zeros(7), 1)], [(np.zeros(7), 0)], HP)


def fake_train_factory(record, accuracy_of=None, fail_when=None):
    def fake_train(train_set, val_set, hp):
        record.append(hp)
        if fail_when is not None and fail_when(hp):
            raise RuntimeError("synthetic failure")
        acc = accuracy_of(hp) if accuracy_of else 0.8
        return MlpModel(
            W1=np.zeros((hp.hidden_size, 19)),
            b1=np.zeros(hp.hidden_size),
            W2=np.zeros((3, hp.hidden_size)),
            b2=np.zeros(3),
            feature_means=np.zeros(19),
            feature_stds=np.ones(19),
            hyperparams=hp,
            training_history=[(1, 1.0, acc), (2, 0.9, acc)],
        )

    return fake_train


DUMMY_SET = [(np.zeros(19), 0), (np.ones(19), 1)]


class TestGridSearch:
    def test_cells_order_is_hidden_major(self):
        grid = HyperparamGrid((16, 64), (1e-2, 1e-4), (10, 20))
        assert grid.cells() == [
            (16, 1e-2, 10),
            (16, 1e-2, 20),
            (16, 1e-4, 10),
            (16, 1e-4, 20),
            (64, 1e-2, 10),
            (64, 1e-2, 20),
            (64, 1e-4, 10),
            (64, 1e-4, 20),
        ]

    def test_empty_axis_rejected(self):
        with pytest.raises(ModelError, match="tolerances"):
            HyperparamGrid((16,), (), (10,))

    def test_single_cell_grid(self):
        rng = np.random.default_rng(17)
        train_set = blobs(10, rng)
        val_set = blobs(4, rng)
        grid = HyperparamGrid((8,), (1e-3,), (3,))
        hp, model, table = grid_search(train_set, val_set, grid, base_seed=5, max_epochs=5)
        assert (hp.hidden_size, hp.early_stop_tolerance, hp.patience_epochs) == (8, 1e-3, 3)
        assert hp.seed == 5
        assert len(table) == 1
        assert table[0].val_accuracy == max(a for _, _, a in model.training_history)
        assert table[0].epochs_run == len(model.training_history)

    def test_cell_seeds_are_base_plus_index(self, monkeypatch):
        seen = []
        monkeypatch.setattr("sentagg.mlp.train", fake_train_factory(seen))
        grid = HyperparamGrid((4, 8), (1e-2,), (5, 10, 15))
        grid_search(DUMMY_SET, DUMMY_SET, grid, base_seed=100)
        assert [hp.seed for hp in seen] == [100 + i for i in range(6)]

    def test_higher_accuracy_wins(self, monkeypatch):
        seen = []
        monkeypatch.setattr(
            "sentagg.mlp.train",
            fake_train_factory(seen, accuracy_of=lambda hp: 0.9 if hp.hidden_size == 64 else 0.5),
        )
        grid = HyperparamGrid((16, 64), (1e-2,), (10,))
        hp, _, table = grid_search(DUMMY_SET, DUMMY_SET, grid)
        assert hp.hidden_size == 64
        assert [c.val_accuracy for c in table] == [0.5, 0.9]

    def test_tie_breaks_small_hidden_large_tol_small_patience(self, monkeypatch):
        seen = []
        monkeypatch.setattr("sentagg.mlp.train", fake_train_factory(seen))
        grid = HyperparamGrid((64, 16), (1e-6, 1e-2), (50, 10))
        hp, _, _ = grid_search(DUMMY_SET, DUMMY_SET, grid)
        assert hp.hidden_size == 16
        assert hp.early_stop_tolerance == 1e-2
        assert hp.patience_epochs == 10

    def test_failed_cell_is_recorded_not_fatal(self, monkeypatch, caplog):
        seen = []
        monkeypatch.setattr(
            "sentagg.mlp.train",
            fake_train_factory(seen, fail_when=lambda hp: hp.hidden_size == 32),
        )
        grid = HyperparamGrid((16, 32), (1e-2,), (10,))
        import logging

        with caplog.at_level(logging.WARNING, logger="sentagg.mlp"):
            hp, _, table = grid_search(DUMMY_SET, DUMMY_SET, grid)
        assert hp.hidden_size == 16
        failed = table[1]
        assert failed.hidden_size == 32
        assert failed.val_accuracy == -1.0
        assert failed.epochs_run == 0
        assert any("failed" in r.getMessage() for r in caplog.records)

    def test_all_cells_failing_raises(self, monkeypatch):
        monkeypatch.setattr(
            "sentagg.mlp.train", fake_train_factory([], fail_when=lambda hp: True)
        )
        with pytest.raises(ModelError, match="every grid cell failed"):
            grid_search(DUMMY_SET, DUMMY_SET, HyperparamGrid((4,), (1e-2,), (5,)))

    def test_parallel_matches_sequential(self):
        rng = np.random.default_rng(18)
        train_set = blobs(12, rng)
        val_set = blobs(4, rng)
        grid = HyperparamGrid((4, 8), (1e-3,), (2,))
        hp1, model1, table1 = grid_search(train_set, val_set, grid, max_epochs=3, jobs=1)
        hp2, model2, table2 = grid_search(train_set, val_set, grid, max_epochs=3, jobs=3)
        assert table1 == table2
        assert hp1 == hp2
        for name in ("W1", "b1", "W2", "b2"):
            np.testing.assert_array_equal(getattr(model1, name), getattr(model2, name))


def test_write_grid_csv(tmp_path):
    path = tmp_path / "grid.csv"
    write_grid_csv(
        path,
        [GridCell(16, 0.01, 10, 0.875, 12), GridCell(32, 1e-06, 50, -1.0, 0)],
    )
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["hidden_size", "tolerance", "patience", "val_accuracy", "epochs_run"]
    assert rows[1] == ["16", "0.01", "10", "0.875", "12"]
    assert rows[2] == ["32", "1e-06", "50", "-1.0", "0"]
    assert float(rows[1][3]) == 0.875


class TestModelIo:
    def trained(self):
        rng = np.random.default_rng(19)
        return train(
            blobs(12, rng),
            blobs(4, rng),
            MlpHyperparams(
                hidden_size=6, early_stop_tolerance=1e-3, patience_epochs=3, max_epochs=8, seed=21
            ),
        )

    def test_round_trip_is_bit_exact(self, tmp_path):
        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        for name in ("W1", "b1", "W2", "b2", "feature_means", "feature_stds"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(model, name))
        assert loaded.hyperparams == model.hyperparams
        assert loaded.training_history == model.training_history
        assert loaded.feature_layout_version == model.feature_layout_version
        rng = np.random.default_rng(20)
        X = rng.normal(0, 3, (100, 19))
        np.testing.assert_array_equal(loaded.predict_proba(X), model.predict_proba(X))

    def test_unsupported_format_version(self, tmp_path):
        import json

        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        document = json.loads(path.read_text())
        document["format_version"] = 99
        path.write_text(json.dumps(document))
        with pytest.raises(ModelError, match="format version 99"):
            load_model(path)

    def test_wrong_feature_layout(self, tmp_path):
        import json

        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        document = json.loads(path.read_text())
        document["feature_layout_version"] = 2
        path.write_text(json.dumps(document))
        with pytest.raises(ModelError, match="feature layout 2"):
            load_model(path)

    def test_truncated_file(self, tmp_path):
        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        content = path.read_text()
        path.write_text(content[: len(content) // 2])
        with pytest.raises(ModelError, match="corrupt"):
            load_model(path)

    def test_missing_field(self, tmp_path):
        import json

        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        document = json.loads(path.read_text())
        del document["W2"]
        path.write_text(json.dumps(document))
        with pytest.raises(ModelError, match="missing field 'W2'"):
            load_model(path)

    def test_wrong_shape(self, tmp_path):
        import json

        model = self.trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        document = json.loads(path.read_text())
        document["b2"] = [0.0, 0.0]
        path.write_text(json.dumps(document))
        with pytest.raises(ModelError, match="b2"):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelError, match="not found"):
            load_model(tmp_path / "absent.json")

    def test_non_object_document(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ModelError, match="JSON object"):
            load_model(path)


def test_format_version_constant():
    assert MODEL_FORMAT_VERSION == 1
