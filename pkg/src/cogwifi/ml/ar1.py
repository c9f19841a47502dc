"""First-order autoregressive forecasting of RSS traces.

The coefficient is the closed-form least-squares solution of regressing
x_t on x_{t-1} with intercept (normal equations), which is what the
baseline forecaster needs for 1-step-ahead prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError


@dataclass(frozen=True)
class Ar1Model:
    phi: float
    intercept: float
    n_fit: int


def ar1_fit(series) -> Ar1Model:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise TrainingError("ar1_fit needs at least 3 points")
    prev = x[:-1]
    nxt = x[1:]
    prev_mean = float(prev.mean())
    nxt_mean = float(nxt.mean())
    var = float(np.sum((prev - prev_mean) ** 2))
    if var == 0.0:
        raise TrainingError("ar1_fit undefined for a constant series")
    cov = float(np.sum((prev - prev_mean) * (nxt - nxt_mean)))
    phi = cov / var
    intercept = nxt_mean - phi * prev_mean
    return Ar1Model(phi=phi, intercept=intercept, n_fit=int(x.size))


def ar1_forecast(model: Ar1Model, last: float, steps: int = 1) -> np.ndarray:
    if steps < 1:
        raise TrainingError("steps must be >= 1")
    out = np.empty(steps)
    value = float(last)
    for i in range(steps):
        value = model.intercept + model.phi * value
        out[i] = value
    return out
