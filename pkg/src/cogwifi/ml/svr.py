"""Epsilon-insensitive RBF support-vector regression solved by SMO.

The dual QP is posed over 2n box variables (the two tube sides), with the
usual equality constraint. Each iteration picks the maximal violating pair
and solves the two-variable subproblem exactly; convergence is declared
when the KKT violation (up-set max minus low-set min) drops below tol.
Inputs and target are z-scored like the MLP, so reported errors share the
normalized scale.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError, TrainingError
from .metrics import RegressionReport, regression_report


@dataclass(frozen=True)
class SvrHyper:
    c: float = 10.0
    epsilon: float = 0.2
    gamma: float | None = None   # None -> 1 / n_features on z-scored inputs
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        if self.c <= 0 or self.epsilon < 0 or self.tol <= 0:
            raise TrainingError("invalid SVR hyperparameters")


@dataclass(frozen=True)
class SvrModel:
    sv_x: np.ndarray          # support vectors in normalized input space
    dual_coef: np.ndarray     # beta = alpha - alpha*, one per support vector
    bias: float
    gamma: float
    epsilon: float
    c: float
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    def __post_init__(self):
        if np.any(np.abs(self.dual_coef) > self.c * (1 + 1e-9)):
            raise TrainingError("dual coefficients must lie within [-C, C]")
        for arr in (self.sv_x, self.dual_coef, self.x_mean, self.x_std):
            np.asarray(arr).setflags(write=False)


def _rbf(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    sq = aa + bb - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _smo(k: np.ndarray, y: np.ndarray, c: float, epsilon: float, tol: float,
         max_iter: int) -> tuple[np.ndarray, float, float, int]:
    """Solve the SVR dual; returns (beta, bias, final_violation, iters)."""
    n = y.size
    # 2n variables: p < n is the +side (alpha), p >= n the -side (alpha*)
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    lin = np.concatenate([epsilon - y, epsilon + y])
    theta = np.zeros(2 * n)
    grad = lin.copy()             # grad = Q theta + lin; theta = 0 initially
    minus_sg = -sign * grad

    iters = 0
    while True:
        up = (sign > 0) & (theta < c) | (sign < 0) & (theta > 0)
        low = (sign < 0) & (theta < c) | (sign > 0) & (theta > 0)
        if not np.any(up) or not np.any(low):
            violation = 0.0
            break
        up_idx = np.nonzero(up)[0]
        low_idx = np.nonzero(low)[0]
        i = up_idx[np.argmax(minus_sg[up_idx])]
        j = low_idx[np.argmin(minus_sg[low_idx])]
        violation = float(minus_sg[i] - minus_sg[j])
        if violation < tol or iters >= max_iter:
            break
        iters += 1

        ki = k[i % n]
        kj = k[j % n]
        # curvature along (z_i e_i - z_j e_j): K_ii + K_jj - 2 K_ij
        quad = max(ki[i % n] + kj[j % n] - 2.0 * ki[j % n], 1e-12)
        # direction: d_theta_i = sign_i * t, d_theta_j = -sign_j * t
        g = sign[i] * grad[i] - sign[j] * grad[j]
        t_step = -g / quad
        # box clipping
        if sign[i] > 0:
            t_step = min(t_step, c - theta[i])
        else:
            t_step = min(t_step, theta[i])
        if sign[j] > 0:
            t_step = min(t_step, theta[j])
        else:
            t_step = min(t_step, c - theta[j])
        if t_step <= 0.0:
            # numerically stuck pair; treat as converged at this violation
            break
        theta[i] += sign[i] * t_step
        theta[j] -= sign[j] * t_step
        # grad_p += sign_p * t * (K[p%n, i%n] - K[p%n, j%n]) for all p
        col = t_step * (ki - kj)
        grad[:n] += col
        grad[n:] -= col
        minus_sg[:n] = -grad[:n]
        minus_sg[n:] = grad[n:]

    beta = theta[:n] - theta[n:]
    free = (theta > 1e-9) & (theta < c - 1e-9)
    if np.any(free):
        bias = float(np.mean(minus_sg[np.nonzero(free)[0]]))
    else:
        m_up = np.max(minus_sg[up]) if np.any(up) else 0.0
        m_low = np.min(minus_sg[low]) if np.any(low) else 0.0
        bias = float((m_up + m_low) / 2.0)
    return beta, bias, violation, iters


def svr_train(ds, hyper: SvrHyper = SvrHyper(), seed: int = 0,
              val_ds=None) -> tuple[SvrModel, RegressionReport]:
    """Fit on a 70-30 split of ds (or all of ds when val_ds is given)."""
    if len(ds) < 50:
        raise TrainingError("svr_train needs at least 50 rows")
    if val_ds is None:
        order = np.random.default_rng(
            np.random.SeedSequence((seed, 0x5117))).permutation(len(ds))
        n_train = int(round(0.7 * len(ds)))
        train_idx, val_idx = order[:n_train], order[n_train:]
        x_train, y_train = ds.features[train_idx], ds.target[train_idx]
        x_val, y_val = ds.features[val_idx], ds.target[val_idx]
    else:
        x_train, y_train = ds.features, ds.target
        x_val, y_val = val_ds.features, val_ds.target

    x_mean = x_train.mean(axis=0)
    x_std = np.where(x_train.std(axis=0) > 0, x_train.std(axis=0), 1.0)
    y_mean = float(y_train.mean())
    y_std = float(y_train.std()) or 1.0
    xn = (x_train - x_mean) / x_std
    yn = (y_train - y_mean) / y_std
    gamma = hyper.gamma if hyper.gamma is not None else 1.0 / xn.shape[1]

    t0 = time.perf_counter()
    kernel = _rbf(xn, xn, gamma)
    beta, bias, violation, iters = _smo(kernel, yn, hyper.c, hyper.epsilon,
                                        hyper.tol, hyper.max_iter)
    elapsed = time.perf_counter() - t0
    if iters >= hyper.max_iter and violation >= hyper.tol:
        raise TrainingError(
            f"SVR did not converge: KKT violation {violation:.3e} after "
            f"{iters} iterations")

    sv = np.abs(beta) > 1e-12
    model = SvrModel(sv_x=xn[sv].copy(), dual_coef=beta[sv].copy(), bias=bias,
                     gamma=gamma, epsilon=hyper.epsilon, c=hyper.c,
                     x_mean=x_mean, x_std=x_std, y_mean=y_mean, y_std=y_std)
    yn_val = (y_val - y_mean) / y_std
    pred_n = _predict_normalized(model, (x_val - x_mean) / x_std)
    return model, regression_report(pred_n, yn_val, elapsed)


def _predict_normalized(model: SvrModel, xn: np.ndarray) -> np.ndarray:
    if model.sv_x.shape[0] == 0:
        return np.full(xn.shape[0], model.bias)
    k = _rbf(xn, model.sv_x, model.gamma)
    return k @ model.dual_coef + model.bias


def svr_predict(model: SvrModel, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    xm = np.atleast_2d(arr)
    if xm.shape[1] != model.x_mean.shape[0]:
        raise DatasetError(
            f"expected {model.x_mean.shape[0]} features, got {xm.shape[1]}")
    xn = (xm - model.x_mean) / model.x_std
    out = _predict_normalized(model, xn) * model.y_std + model.y_mean
    return float(out[0]) if single else out


def kkt_violations(model: SvrModel, x, y) -> np.ndarray:
    """Per-point KKT violation magnitudes on training data (physical units
    in, normalized residuals judged against the epsilon tube).

    For err = f(x) - y in normalized space and beta the point's dual coef:
      beta = 0      requires |err| <= eps
      0 < beta < C  requires err = -eps ; -C < beta < 0 requires err = +eps
      beta = C      requires err <= -eps ; beta = -C requires err >= eps
    Returns the amount by which each training point breaks its condition.
    """
    xm = np.atleast_2d(np.asarray(x, dtype=float))
    yv = np.asarray(y, dtype=float)
    xn = (xm - model.x_mean) / model.x_std
    yn = (yv - model.y_mean) / model.y_std
    err = _predict_normalized(model, xn) - yn
    # recover each training point's beta (0 for non-SVs)
    beta = np.zeros(xn.shape[0])
    if model.sv_x.shape[0]:
        k = _rbf(xn, model.sv_x, model.gamma)
        match = k > 1.0 - 1e-12
        for row, cols in enumerate(match):
            hit = np.nonzero(cols)[0]
            if hit.size:
                beta[row] = float(model.dual_coef[hit].sum())
    eps = model.epsilon
    c = model.c
    bound = 1e-6 * c
    viol = np.zeros_like(err)
    at_zero = np.abs(beta) <= bound
    pos_free = (beta > bound) & (beta < c - bound)
    neg_free = (beta < -bound) & (beta > -c + bound)
    at_pos_c = beta >= c - bound
    at_neg_c = beta <= -c + bound
    viol[at_zero] = np.maximum(np.abs(err[at_zero]) - eps, 0.0)
    viol[pos_free] = np.abs(err[pos_free] + eps)
    viol[neg_free] = np.abs(err[neg_free] - eps)
    viol[at_pos_c] = np.maximum(err[at_pos_c] + eps, 0.0)
    viol[at_neg_c] = np.maximum(-(err[at_neg_c] - eps), 0.0)
    return viol
