"""Evaluation metrics and deterministic k-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts; class 1 = handover, class 0 = no handover."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise DatasetError("confusion counts must be >= 0")

    @property
    def recall_positive(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def recall_negative(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else 0.0

    @property
    def miss_rate(self) -> float:
        return self.fn / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def false_alarm_rate(self) -> float:
        return self.fp / (self.tn + self.fp) if self.tn + self.fp else 0.0

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fn + self.fp + self.tn
        return (self.tp + self.tn) / total if total else 0.0

    def rates(self) -> dict[str, float]:
        return {
            "actual_1_predicted_1": self.recall_positive,
            "actual_1_predicted_0": self.miss_rate,
            "actual_0_predicted_1": self.false_alarm_rate,
            "actual_0_predicted_0": self.recall_negative,
        }


@dataclass(frozen=True)
class RegressionReport:
    mse: float
    r_squared: float
    training_time_s: float

    def __post_init__(self):
        if self.mse < 0:
            raise DatasetError("mse must be >= 0")
        if self.r_squared > 1.0:
            raise DatasetError("r_squared cannot exceed 1")


def confusion(preds, labels) -> ConfusionMatrix:
    p = np.asarray(preds)
    y = np.asarray(labels)
    if p.shape != y.shape or p.size == 0:
        raise DatasetError("predictions and labels must be equal-length, non-empty")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (y == 1))),
        fn=int(np.sum((p == 0) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        tn=int(np.sum((p == 0) & (y == 0))),
    )


def mse(preds, targets) -> float:
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise DatasetError("predictions and targets must be equal-length, non-empty")
    return float(np.mean((p - t) ** 2))


def r_squared(preds, targets) -> float:
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise DatasetError("predictions and targets must be equal-length, non-empty")
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise DatasetError("r_squared undefined for zero-variance targets")
    ss_res = float(np.sum((t - p) ** 2))
    return 1.0 - ss_res / ss_tot


def regression_report(pred_n, target_n, elapsed_s: float) -> RegressionReport:
    """Held-out report on the normalized target scale. A zero-variance
    validation target makes R-squared undefined; report 1.0 for an exact
    predictor and 0.0 otherwise."""
    err = mse(pred_n, target_n)
    t = np.asarray(target_n, dtype=float)
    if float(np.sum((t - t.mean()) ** 2)) == 0.0:
        r2 = 1.0 if err == 0.0 else 0.0
    else:
        r2 = r_squared(pred_n, target_n)
    return RegressionReport(mse=err, r_squared=r2, training_time_s=elapsed_s)


def kfold_indices(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Seeded shuffle, then k folds whose sizes differ by at most one."""
    if k < 2:
        raise DatasetError("k must be >= 2")
    if k > n:
        raise DatasetError("k cannot exceed the number of rows")
    order = np.random.default_rng(np.random.SeedSequence((seed, 0xF01D))).permutation(n)
    return [order[i::k] for i in range(k)]


def kfold_cv(ds, trainer, k: int = 10, seed: int = 0) -> list:
    """Run trainer(train_ds, val_ds) on each of k deterministic folds."""
    folds = kfold_indices(len(ds), k, seed)
    reports = []
    all_idx = np.arange(len(ds))
    for fold in folds:
        mask = np.ones(len(ds), dtype=bool)
        mask[fold] = False
        train_ds = ds.take(all_idx[mask])
        val_ds = ds.take(fold)
        reports.append(trainer(train_ds, val_ds))
    return reports
