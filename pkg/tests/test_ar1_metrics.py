import numpy as np
import pytest

from cogwifi.errors import DatasetError, TrainingError
from cogwifi.features import Dataset, window_features
from cogwifi.ml import (
    ar1_fit,
    ar1_forecast,
    confusion,
    kfold_cv,
    mse,
    r_squared,
)
from cogwifi.ml.metrics import kfold_indices


def oracle_ols_ar1(series):
    """Normal equations for x_t = c + phi*x_{t-1}, solved with lstsq."""
    x = np.asarray(series, dtype=float)
    a = np.column_stack([np.ones(x.size - 1), x[:-1]])
    coef, *_ = np.linalg.lstsq(a, x[1:], rcond=None)
    return float(coef[1]), float(coef[0])


class TestAr1:
    def test_noiseless_recurrence_recovers_phi(self):
        x = [10.0]
        for _ in range(20):
            x.append(0.5 * x[-1] + 3.0)
        model = ar1_fit(x)
        assert model.phi == pytest.approx(0.5, abs=1e-12)
        assert model.intercept == pytest.approx(3.0, abs=1e-9)

    def test_one_step_forecast_exact(self):
        x = [5.0]
        for _ in range(15):
            x.append(0.5 * x[-1] + 1.0)
        model = ar1_fit(x[:-1])
        pred = ar1_forecast(model, x[-2], steps=1)
        assert pred[0] == pytest.approx(x[-1], abs=1e-9)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(5, 60))
            x = np.cumsum(rng.normal(0, 1, size=n)) - 70.0
            model = ar1_fit(x)
            phi, c = oracle_ols_ar1(x)
            assert model.phi == pytest.approx(phi, rel=1e-9, abs=1e-9)
            assert model.intercept == pytest.approx(c, rel=1e-9, abs=1e-9)

    def test_multi_step_applies_recurrence(self):
        model = ar1_fit([1.0, 2.0, 2.5, 3.1, 3.0])
        two = ar1_forecast(model, 3.0, steps=2)
        one = model.intercept + model.phi * 3.0
        assert two[0] == pytest.approx(one)
        assert two[1] == pytest.approx(model.intercept + model.phi * one)

    def test_constant_series_rejected(self):
        with pytest.raises(TrainingError, match="constant"):
            ar1_fit([4.0, 4.0, 4.0, 4.0])

    def test_short_series_rejected(self):
        with pytest.raises(TrainingError, match="3"):
            ar1_fit([1.0, 2.0])


class TestConfusion:
    def test_perfect_predictions(self):
        cm = confusion([1, 0, 1, 0], [1, 0, 1, 0])
        assert (cm.fp, cm.fn) == (0, 0)
        assert cm.recall_positive == 1.0
        assert cm.recall_negative == 1.0

    def test_paper_style_counts_to_rates(self):
        labels = np.concatenate([np.ones(1000), np.zeros(1000)])
        preds = np.concatenate([
            np.ones(905), np.zeros(95),    # actual handover
            np.ones(62), np.zeros(938),    # actual no-handover
        ])
        cm = confusion(preds, labels)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (905, 95, 62, 938)
        assert cm.recall_positive == pytest.approx(0.905)
        assert cm.miss_rate == pytest.approx(0.095)
        assert cm.false_alarm_rate == pytest.approx(0.062)
        assert cm.recall_negative == pytest.approx(0.938)
        rates = cm.rates()
        assert rates["actual_1_predicted_1"] + rates["actual_1_predicted_0"] \
            == pytest.approx(1.0)
        assert rates["actual_0_predicted_1"] + rates["actual_0_predicted_0"] \
            == pytest.approx(1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DatasetError):
            confusion([1, 0], [1])


class TestRegressionMetrics:
    def test_perfect_fit(self):
        t = np.array([1.0, 2.0, 5.0])
        assert mse(t, t) == 0.0
        assert r_squared(t, t) == 1.0

    def test_mean_predictor_r2_zero(self):
        t = np.array([1.0, 3.0, 5.0, 9.0])
        p = np.full(4, t.mean())
        assert r_squared(p, t) == pytest.approx(0.0)

    def test_zero_variance_targets_rejected(self):
        with pytest.raises(DatasetError, match="zero-variance"):
            r_squared([1.0, 2.0], [3.0, 3.0])


def tiny_dataset(n=24):
    rng = np.random.default_rng(0)
    feats = np.array([window_features(rng.normal(-75, 3, size=10))
                      for _ in range(n)])
    labels = rng.integers(0, 2, size=n).astype(float)
    return Dataset("handover", feats, labels)


class TestKfold:
    def test_leave_one_out_boundary(self):
        ds = tiny_dataset(8)
        seen = []

        def trainer(train_ds, val_ds):
            assert len(train_ds) == 7
            assert len(val_ds) == 1
            seen.append(len(val_ds))
            return len(val_ds)

        reports = kfold_cv(ds, trainer, k=8)
        assert len(reports) == 8

    def test_fold_sizes_differ_by_at_most_one(self):
        sizes = [len(f) for f in kfold_indices(25, 10)]
        assert max(sizes) - min(sizes) <= 1

    def test_folds_partition_dataset(self):
        folds = kfold_indices(37, 10, seed=3)
        merged = np.concatenate(folds)
        assert np.array_equal(np.sort(merged), np.arange(37))

    def test_k_larger_than_rows_rejected(self):
        ds = tiny_dataset(5)
        with pytest.raises(DatasetError):
            kfold_cv(ds, lambda a, b: None, k=6)

    def test_deterministic_assignment(self):
        a = kfold_indices(30, 5, seed=9)
        b = kfold_indices(30, 5, seed=9)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa, fb)
