import numpy as np
import pytest

from cogwifi.errors import DatasetError, TrainingError
from cogwifi.features import Dataset
from cogwifi.ml import MlpModel, load_model, mlp_predict, mlp_train, save_model
from cogwifi.ml.mlp import loss_and_grads


def linear_dataset(n=400, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    n_clients = rng.integers(1, 20, size=n).astype(float)
    iat_mean = rng.uniform(0.001, 0.1, size=n)
    iat_min = iat_mean * 0.5
    iat_max = iat_mean * 2.0
    skew = rng.normal(0, 1, size=n)
    kurt = rng.normal(0, 1, size=n)
    feats = np.column_stack([n_clients, iat_mean, iat_min, iat_max, skew, kurt])
    target = 0.8 * n_clients + 30.0 * iat_mean + 0.5 * skew + 2.0
    target = target + rng.normal(0, noise, size=n)
    return Dataset("throughput", feats, np.maximum(target, 0.0))


class TestTraining:
    def test_realizable_linear_function(self):
        ds = linear_dataset(500, seed=1)
        _, report = mlp_train(ds, arch=(32, 32), epochs=300, seed=0)
        assert report.r_squared >= 0.999

    def test_zero_epochs_still_reports(self):
        ds = linear_dataset(200, seed=2)
        model, report = mlp_train(ds, epochs=0, seed=0)
        assert np.isfinite(report.mse)
        assert report.r_squared <= 1.0
        assert isinstance(model, MlpModel)

    def test_divergence_raises_training_error(self):
        ds = linear_dataset(200, seed=3)
        with pytest.raises(TrainingError, match="diverged"):
            mlp_train(ds, epochs=50, lr=1e200, seed=0)

    def test_small_dataset_rejected(self):
        ds = linear_dataset(20, seed=4)
        with pytest.raises(TrainingError, match="50"):
            mlp_train(ds)

    def test_deterministic(self):
        ds = linear_dataset(120, seed=5)
        m1, r1 = mlp_train(ds, epochs=5, seed=11)
        m2, r2 = mlp_train(ds, epochs=5, seed=11)
        assert r1.mse == r2.mse
        for a, b in zip(m1.weights, m2.weights):
            assert np.array_equal(a, b)


class TestPrediction:
    def test_pure_function(self):
        ds = linear_dataset(120, seed=6)
        model, _ = mlp_train(ds, epochs=5, seed=0)
        x = ds.features[3]
        assert mlp_predict(model, x) == mlp_predict(model, x)

    def test_zero_weights_predict_training_mean(self):
        # handcrafted single linear layer with zero weights: output is the
        # normalized-space zero, de-normalized to the training mean
        model = MlpModel(weights=(np.zeros((6, 1)),), biases=(np.zeros(1),),
                         x_mean=np.zeros(6), x_std=np.ones(6),
                         y_mean=7.25, y_std=2.0)
        assert mlp_predict(model, np.zeros(6)) == pytest.approx(7.25)

    def test_dimension_mismatch_rejected(self):
        ds = linear_dataset(120, seed=7)
        model, _ = mlp_train(ds, epochs=1, seed=0)
        with pytest.raises(DatasetError, match="features"):
            mlp_predict(model, np.zeros(4))


class TestGradients:
    def test_backprop_matches_central_differences(self):
        rng = np.random.default_rng(42)
        for trial in range(3):
            sizes = [4, 5, 3, 1]
            weights = [rng.normal(0, 0.7, size=(a, b))
                       for a, b in zip(sizes, sizes[1:])]
            biases = [rng.normal(0, 0.3, size=b) for b in sizes[1:]]
            x = rng.normal(0, 1, size=(12, 4))
            y = rng.normal(0, 1, size=12)
            _, grad_w, grad_b = loss_and_grads(weights, biases, x, y)
            h = 1e-6
            for li in range(len(weights)):
                for index in [(0, 0), (weights[li].shape[0] - 1,
                                       weights[li].shape[1] - 1)]:
                    w_plus = [w.copy() for w in weights]
                    w_minus = [w.copy() for w in weights]
                    w_plus[li][index] += h
                    w_minus[li][index] -= h
                    lp, _, _ = loss_and_grads(w_plus, biases, x, y)
                    lm, _, _ = loss_and_grads(w_minus, biases, x, y)
                    fd = (lp - lm) / (2 * h)
                    assert grad_w[li][index] == pytest.approx(fd, rel=1e-4, abs=1e-8)
                b_plus = [b.copy() for b in biases]
                b_minus = [b.copy() for b in biases]
                b_plus[li][0] += h
                b_minus[li][0] -= h
                lp, _, _ = loss_and_grads(weights, b_plus, x, y)
                lm, _, _ = loss_and_grads(weights, b_minus, x, y)
                fd = (lp - lm) / (2 * h)
                assert grad_b[li][0] == pytest.approx(fd, rel=1e-4, abs=1e-8)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        ds = linear_dataset(150, seed=8)
        model, _ = mlp_train(ds, epochs=10, seed=1)
        path = tmp_path / "mlp.model"
        save_model(model, path)
        back = load_model(path)
        x = ds.features[:25]
        assert np.array_equal(mlp_predict(model, x), mlp_predict(back, x))
