import numpy as np
import pandas as pd
import pytest

from netdef.builders import build_tranet
from netdef.gradcheck import tiny_spec
from netdef.network import Network, init_params
from trainer.loop import train
from trainer.metrics import evaluate, metrics_from_predictions, predict, write_metrics_csv
from trainer.optim import init_velocity, sgd_step
from trainer.schemas import TrainConfig, make_train_config
from trainer.split import split_dataset, stratified_indices
from utils.errors import ClassStarvationError, InvalidParameterError, ShapeMismatchError, TrainingDivergedError
from windowing.dataset import Dataset, DatasetMeta


# =============================================================================
# Fixtures
# =============================================================================

def make_dataset(images, labels):
    n = len(labels)
    return Dataset(
        images=np.asarray(images, dtype=np.float32),
        labels=np.asarray(labels, dtype=np.int64),
        image_ids=np.array([f"toy_{i}" for i in range(n)], dtype=object),
        rects=np.zeros((n, 4), dtype=np.int64),
        flipped=np.zeros(n, dtype=bool),
        meta=DatasetMeta(window=(28, 28), stride=(28, 28), input_size=(28, 28), corpus="toy"),
    )


@pytest.fixture
def toy_set():
    """Four constant images, one per class."""
    levels = [0.0, 1 / 3, 2 / 3, 1.0]
    images = np.stack([np.full((1, 28, 28), level) for level in levels])
    return make_dataset(images, [0, 1, 2, 3])


@pytest.fixture
def balanced_labels():
    return np.repeat(np.arange(4), 10)


# =============================================================================
# Configuration
# =============================================================================

class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.deterministic is True
        assert config.dtype == "float64"
        assert 0 < config.train_fraction < 1

    def test_invalid_values_become_parameter_errors(self):
        with pytest.raises(InvalidParameterError):
            make_train_config(momentum=1.0)
        with pytest.raises(InvalidParameterError):
            make_train_config(learning_rate=0.0)
        with pytest.raises(InvalidParameterError):
            make_train_config(lr_decay=(1.5, 10))

    def test_none_values_keep_defaults(self):
        assert make_train_config(learning_rate=None).learning_rate == TrainConfig().learning_rate

    def test_step_decay(self):
        config = make_train_config(learning_rate=0.1, lr_decay=(0.5, 10))
        assert config.learning_rate_at(1) == pytest.approx(0.1)
        assert config.learning_rate_at(10) == pytest.approx(0.1)
        assert config.learning_rate_at(11) == pytest.approx(0.05)
        assert config.learning_rate_at(21) == pytest.approx(0.025)


# =============================================================================
# Split
# =============================================================================

class TestStratifiedSplit:
    def test_partition_is_disjoint_and_complete(self, balanced_labels):
        train_idx, test_idx = stratified_indices(balanced_labels, 0.8, seed=3)
        assert len(train_idx) == 32 and len(test_idx) == 8
        assert set(train_idx).isdisjoint(test_idx)
        assert sorted(np.concatenate([train_idx, test_idx])) == list(range(40))

    def test_every_class_on_both_sides(self, balanced_labels):
        train_idx, test_idx = stratified_indices(balanced_labels, 0.8, seed=3)
        assert np.bincount(balanced_labels[train_idx]).tolist() == [8, 8, 8, 8]
        assert np.bincount(balanced_labels[test_idx]).tolist() == [2, 2, 2, 2]

    def test_rounding_and_clamping(self):
        labels = np.array([0, 0, 0, 1, 1])
        train_idx, test_idx = stratified_indices(labels, 0.5, seed=0)
        assert np.bincount(labels[train_idx], minlength=2).tolist() == [2, 1]
        assert np.bincount(labels[test_idx], minlength=2).tolist() == [1, 1]

    def test_same_seed_same_split(self, balanced_labels):
        first = stratified_indices(balanced_labels, 0.8, seed=5)
        second = stratified_indices(balanced_labels, 0.8, seed=5)
        other = stratified_indices(balanced_labels, 0.8, seed=6)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])
        assert not np.array_equal(first[1], other[1])

    def test_forty_per_class(self):
        labels = np.repeat(np.arange(4), 40)
        train_idx, test_idx = stratified_indices(labels, 0.8, seed=1)
        assert np.bincount(labels[train_idx]).tolist() == [32, 32, 32, 32]
        assert np.bincount(labels[test_idx]).tolist() == [8, 8, 8, 8]
        other_train, _ = stratified_indices(labels, 0.8, seed=2)
        assert not np.array_equal(train_idx, other_train)

    def test_test_indices_sorted(self, balanced_labels):
        _, test_idx = stratified_indices(balanced_labels, 0.8, seed=1)
        assert list(test_idx) == sorted(test_idx)

    def test_singleton_class_starves(self):
        with pytest.raises(ClassStarvationError):
            stratified_indices(np.array([0, 0, 1]), 0.8, seed=0)

    def test_fraction_range(self, balanced_labels):
        with pytest.raises(InvalidParameterError):
            stratified_indices(balanced_labels, 1.0, seed=0)

    def test_split_dataset_subsets(self, balanced_labels):
        images = np.zeros((40, 1, 28, 28))
        train_set, test_set = split_dataset(make_dataset(images, balanced_labels), 0.8, seed=2)
        assert len(train_set) + len(test_set) == 40
        assert set(train_set.image_ids).isdisjoint(test_set.image_ids)


# =============================================================================
# Optimizer
# =============================================================================

class TestSgd:
    @pytest.fixture
    def single_weight(self):
        return Network(spec=tiny_spec(), params=[{"weight": np.ones((1, 1))}])

    def test_momentum_and_decay_update(self, single_weight):
        config = TrainConfig(learning_rate=0.1, momentum=0.9, weight_decay=0.01)
        velocity = init_velocity(single_weight)
        grads = [{"weight": np.full((1, 1), 0.5)}]
        sgd_step(single_weight, grads, velocity, config)
        assert velocity[0]["weight"][0, 0] == pytest.approx(-0.051)
        assert single_weight.params[0]["weight"][0, 0] == pytest.approx(0.949)
        sgd_step(single_weight, grads, velocity, config)
        expected_v = 0.9 * -0.051 - 0.1 * (0.5 + 0.01 * 0.949)
        assert velocity[0]["weight"][0, 0] == pytest.approx(expected_v)
        assert single_weight.params[0]["weight"][0, 0] == pytest.approx(0.949 + expected_v)

    def test_explicit_learning_rate_overrides(self, single_weight):
        config = TrainConfig(learning_rate=0.1, momentum=0.0, weight_decay=0.0)
        sgd_step(single_weight, [{"weight": np.ones((1, 1))}], init_velocity(single_weight), config, 0.5)
        assert single_weight.params[0]["weight"][0, 0] == pytest.approx(0.5)

    def test_gradient_shape_mismatch(self, single_weight):
        with pytest.raises(ShapeMismatchError):
            sgd_step(single_weight, [{"weight": np.ones((2, 1))}], init_velocity(single_weight), TrainConfig())


# =============================================================================
# Metrics
# =============================================================================

class TestMetrics:
    def test_confusion_precision_recall(self):
        metrics = metrics_from_predictions([0, 0, 1, 2, 3], [0, 1, 1, 2, 0], 4)
        assert metrics.accuracy == pytest.approx(0.6)
        assert metrics.confusion.tolist() == [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0]]
        np.testing.assert_allclose(metrics.precision, [0.5, 0.5, 1.0, 0.0])
        np.testing.assert_allclose(metrics.recall, [0.5, 1.0, 1.0, 0.0])

    def test_balanced_accuracy_ignores_the_majority_prior(self):
        labels = [3] * 8 + [0, 1]
        metrics = metrics_from_predictions(labels, [3] * 10, 4)
        assert metrics.accuracy == pytest.approx(0.8)
        assert metrics.balanced_accuracy == pytest.approx(1 / 3)
        assert metrics.summary()["balanced_accuracy"] == pytest.approx(1 / 3)

    def test_empty_labels(self):
        with pytest.raises(InvalidParameterError):
            metrics_from_predictions([], [], 4)

    def test_csv_blocks(self, tmp_path):
        metrics = metrics_from_predictions([0, 1, 2, 3], [0, 1, 2, 2], 4)
        metrics.loss_history = [1.2, 0.8]
        metrics.accuracy_history = [0.5, 0.75]
        path = write_metrics_csv(metrics, str(tmp_path / "metrics.csv"))
        lines = open(path, encoding="utf-8").read().splitlines()
        assert lines[0] == "epoch,train_loss,test_acc"
        assert lines[1].startswith("1,1.2,0.5")
        assert "# confusion" in lines and "# per_class" in lines
        assert lines[lines.index("# confusion") + 1] == "true_class,Left,Peak,Right,Other"
        assert lines[-2] == "# accuracy,0.750000"
        assert lines[-1] == "# balanced_accuracy,0.750000"
        epochs = pd.read_csv(path, nrows=2)
        assert list(epochs["epoch"]) == [1, 2]

    def test_predict_returns_distributions(self, toy_set):
        network = init_params(build_tranet(), 0)
        probs, labels = predict(network, toy_set.images, batch_size=3)
        assert probs.shape == (4, 4)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        np.testing.assert_array_equal(labels, probs.argmax(axis=1))

    def test_constant_predictor_on_balanced_set(self, toy_set):
        network = init_params(build_tranet(), 0)
        last = max(i for i, params in enumerate(network.params) if "weight" in params)
        network.params[last]["weight"][...] = 0.0
        network.params[last]["bias"][...] = [0.0, 0.0, 0.0, 5.0]
        metrics = evaluate(network, toy_set)
        assert metrics.predictions.tolist() == [3, 3, 3, 3]
        assert metrics.accuracy == pytest.approx(0.25)
        assert metrics.balanced_accuracy == pytest.approx(0.25)

    def test_evaluate_empty_dataset(self, toy_set):
        with pytest.raises(InvalidParameterError):
            evaluate(init_params(build_tranet(), 0), toy_set.subset([]))


# =============================================================================
# Training loop
# =============================================================================

class TestTraining:
    def test_separates_constant_images(self, toy_set):
        config = TrainConfig(learning_rate=0.01, momentum=0.9, weight_decay=0.0,
                             batch_size=4, max_epochs=50, seed=0)
        result = train(build_tranet(), toy_set, config, test_set=toy_set)
        assert result.metrics.accuracy == 1.0
        assert 1 <= result.best_epoch <= 50
        assert len(result.loss_history) == result.epochs_run == 50
        assert result.loss_history[-1] < result.loss_history[0]

    def test_same_seed_same_run(self, toy_set):
        config = TrainConfig(learning_rate=0.01, batch_size=2, max_epochs=3, seed=4)
        first = train(build_tranet(), toy_set, config, test_set=toy_set)
        second = train(build_tranet(), toy_set, config, test_set=toy_set)
        assert first.loss_history == second.loss_history
        np.testing.assert_array_equal(first.network.params[0]["weight"], second.network.params[0]["weight"])

    def test_internal_split(self, balanced_labels):
        rng = np.random.default_rng(0)
        images = rng.random((40, 1, 28, 28)) * 0.1 + balanced_labels[:, None, None, None] / 4.0
        result = train(build_tranet(), make_dataset(images, balanced_labels),
                       TrainConfig(batch_size=8, max_epochs=2, seed=1))
        assert result.metrics.confusion.sum() == 8

    def test_nan_loss_reports_epoch(self, toy_set):
        poisoned = make_dataset(np.full((4, 1, 28, 28), np.nan), [0, 1, 2, 3])
        with pytest.raises(TrainingDivergedError, match="epoch 1"):
            train(build_tranet(), poisoned, TrainConfig(batch_size=4, max_epochs=2), test_set=toy_set)

    def test_wrong_image_size(self, toy_set):
        with pytest.raises(ShapeMismatchError):
            train(build_tranet((1, 32, 32)), toy_set, TrainConfig(max_epochs=1), test_set=toy_set)

    def test_empty_dataset(self, toy_set):
        with pytest.raises(InvalidParameterError):
            train(build_tranet(), toy_set.subset([]), TrainConfig(max_epochs=1))
