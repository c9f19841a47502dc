"""Multilayer-perceptron regressor trained with mini-batch gradient descent.

Hidden layers use the smooth rectifier softplus (its smoothness is what
makes the finite-difference gradient check meaningful). Inputs and target
are z-scored with statistics from the training split; moment-scaled (Adam)
updates keep the default learning rate workable. Reported MSE/R-squared are
on the normalized target scale.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError, TrainingError
from .metrics import RegressionReport, regression_report


@dataclass(frozen=True)
class MlpModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    def __post_init__(self):
        for w, b in zip(self.weights, self.biases):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise TrainingError("model parameters must be finite")
            w.setflags(write=False)
            b.setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]


def _softplus(z):
    # numerically stable log(1 + exp(z))
    return np.logaddexp(0.0, z)


def _forward(weights, biases, xn):
    """Normalized-space forward pass; returns activations per layer."""
    acts = [xn]
    h = xn
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == last else _softplus(z)
        acts.append(h)
    return acts


def _backward(weights, acts, resid):
    """Gradients of 0.5*mean(resid^2) w.r.t. every weight and bias."""
    n = acts[0].shape[0]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    delta = resid.reshape(-1, 1) / n
    for i in range(len(weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i].T
            # softplus'(z) = sigmoid(z); recover from activation:
            # a = softplus(z) => sigmoid(z) = 1 - exp(-a)
            delta = delta * (1.0 - np.exp(-acts[i]))
    return grad_w, grad_b


def loss_and_grads(weights, biases, xn, yn):
    """Loss 0.5*mean((f(x)-y)^2) and parameter gradients, used directly by
    training and by the finite-difference oracle tests."""
    acts = _forward(weights, biases, xn)
    resid = acts[-1].ravel() - yn
    loss = 0.5 * float(np.mean(resid ** 2))
    grad_w, grad_b = _backward(weights, acts, resid)
    return loss, grad_w, grad_b


def _init_params(n_in: int, arch: tuple[int, ...], rng):
    sizes = [n_in, *arch, 1]
    weights = []
    biases = []
    for a, b in zip(sizes, sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b)))
        biases.append(np.zeros(b))
    return weights, biases


def _split_70_30(n: int, seed: int):
    order = np.random.default_rng(np.random.SeedSequence((seed, 0x5117))).permutation(n)
    n_train = int(round(0.7 * n))
    return order[:n_train], order[n_train:]


def _norm_stats(x, y):
    x_mean = x.mean(axis=0)
    x_std = x.std(axis=0)
    x_std = np.where(x_std > 0, x_std, 1.0)
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0
    return x_mean, x_std, y_mean, y_std


def mlp_train(ds, arch: tuple[int, ...] = (64, 64), epochs: int = 200,
              lr: float = 1e-3, batch: int = 32, seed: int = 0,
              val_ds=None) -> tuple[MlpModel, RegressionReport]:
    """Train on a 70-30 split of ds (or on all of ds when val_ds is given)
    and report held-out MSE and R-squared on the normalized target."""
    if len(ds) < 50:
        raise TrainingError("mlp_train needs at least 50 rows")
    if val_ds is None:
        train_idx, val_idx = _split_70_30(len(ds), seed)
        x_train, y_train = ds.features[train_idx], ds.target[train_idx]
        x_val, y_val = ds.features[val_idx], ds.target[val_idx]
    else:
        x_train, y_train = ds.features, ds.target
        x_val, y_val = val_ds.features, val_ds.target

    x_mean, x_std, y_mean, y_std = _norm_stats(x_train, y_train)
    xn = (x_train - x_mean) / x_std
    yn = (y_train - y_mean) / y_std

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x111)))
    weights, biases = _init_params(xn.shape[1], tuple(arch), rng)

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    t0 = time.perf_counter()
    n = xn.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad_w, grad_b = loss_and_grads(weights, biases,
                                                      xn[idx], yn[idx])
            if not np.isfinite(loss):
                raise TrainingError("training diverged: loss is non-finite")
            step += 1
            corr1 = 1.0 - beta1 ** step
            corr2 = 1.0 - beta2 ** step
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * grad_w[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * grad_w[i] ** 2
                weights[i] = weights[i] - lr * (m_w[i] / corr1) \
                    / (np.sqrt(v_w[i] / corr2) + eps)
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * grad_b[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * grad_b[i] ** 2
                biases[i] = biases[i] - lr * (m_b[i] / corr1) \
                    / (np.sqrt(v_b[i] / corr2) + eps)
    elapsed = time.perf_counter() - t0

    model = MlpModel(weights=tuple(weights), biases=tuple(biases),
                     x_mean=x_mean, x_std=x_std, y_mean=y_mean, y_std=y_std)
    yn_val = (y_val - y_mean) / y_std
    pred_n = _forward(model.weights, model.biases,
                      (x_val - x_mean) / x_std)[-1].ravel()
    return model, regression_report(pred_n, yn_val, elapsed)


def mlp_predict(model: MlpModel, x) -> np.ndarray | float:
    """Forward pass de-normalized to physical units (Mbps)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    xm = np.atleast_2d(arr)
    if xm.shape[1] != model.n_inputs:
        raise DatasetError(f"expected {model.n_inputs} features, got {xm.shape[1]}")
    if not np.all(np.isfinite(xm)):
        raise DatasetError("features must be finite")
    xn = (xm - model.x_mean) / model.x_std
    pred = _forward(model.weights, model.biases, xn)[-1].ravel()
    out = pred * model.y_std + model.y_mean
    return float(out[0]) if single else out
