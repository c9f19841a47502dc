import numpy as np
import pytest

from cogwifi.features import Dataset
from cogwifi.ml import SvrHyper, load_model, save_model, svr_predict, svr_train
from cogwifi.ml.svr import kkt_violations


def smooth_dataset(n=220, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    n_clients = rng.integers(1, 15, size=n).astype(float)
    iat_mean = rng.uniform(0.005, 0.08, size=n)
    feats = np.column_stack([
        n_clients, iat_mean, iat_mean * 0.4, iat_mean * 2.1,
        rng.normal(0, 0.5, size=n), rng.normal(0, 0.5, size=n)])
    target = 2.0 + 0.6 * n_clients + np.sin(40.0 * iat_mean) \
        + rng.normal(0, noise, size=n)
    return Dataset("throughput", feats, np.maximum(target, 0.0))


class TestTraining:
    def test_constant_target_predicts_constant(self):
        rng = np.random.default_rng(1)
        feats = np.column_stack([
            rng.integers(1, 9, size=80).astype(float),
            rng.uniform(0.01, 0.05, size=80),
            rng.uniform(0.001, 0.01, size=80),
            rng.uniform(0.06, 0.2, size=80),
            rng.normal(size=80), rng.normal(size=80)])
        ds = Dataset("throughput", feats, np.full(80, 4.5))
        model, _ = svr_train(ds, seed=0)
        assert model.dual_coef.size == 0
        preds = svr_predict(model, ds.features[:10])
        assert np.allclose(preds, 4.5)

    def test_realizable_fit_within_tube(self):
        ds = smooth_dataset(220, seed=2)
        hyper = SvrHyper(c=100.0, epsilon=0.1)
        model, _ = svr_train(ds, hyper=hyper, seed=0, val_ds=ds)
        preds = np.asarray(svr_predict(model, ds.features))
        resid_norm = np.abs(preds - ds.target) / model.y_std
        assert np.max(resid_norm) <= hyper.epsilon + 1e-3

    def test_kkt_conditions_hold_at_convergence(self):
        ds = smooth_dataset(200, seed=3, noise=0.15)
        model, _ = svr_train(ds, SvrHyper(c=10.0, epsilon=0.2), seed=0, val_ds=ds)
        viol = kkt_violations(model, ds.features, ds.target)
        assert float(np.max(viol)) < 5e-3

    def test_deterministic(self):
        ds = smooth_dataset(150, seed=4, noise=0.1)
        m1, r1 = svr_train(ds, seed=5)
        m2, r2 = svr_train(ds, seed=5)
        assert r1.mse == r2.mse
        assert np.array_equal(m1.dual_coef, m2.dual_coef)

    def test_dual_coefficients_bounded_by_c(self):
        ds = smooth_dataset(180, seed=6, noise=0.4)
        hyper = SvrHyper(c=2.0, epsilon=0.05)
        model, _ = svr_train(ds, hyper=hyper, seed=0)
        assert np.max(np.abs(model.dual_coef)) <= hyper.c + 1e-9


class TestPersistence:
    def test_round_trip(self, tmp_path):
        ds = smooth_dataset(150, seed=7, noise=0.2)
        model, _ = svr_train(ds, seed=0)
        path = tmp_path / "svr.model"
        save_model(model, path)
        back = load_model(path)
        x = ds.features[:20]
        assert np.array_equal(np.asarray(svr_predict(model, x)),
                              np.asarray(svr_predict(back, x)))
