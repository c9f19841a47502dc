"""Model persistence: self-describing JSON files, lossless round-trip.

Every file carries a schema id and a version byte; floats survive exactly
because json serializes them via repr.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DatasetError
from .ar1 import Ar1Model
from .forest import ForestModel, RfHyper, Tree
from .mlp import MlpModel
from .svr import SvrModel

FORMAT_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a).tolist()


def save_model(model, path) -> None:
    if isinstance(model, ForestModel):
        payload = {
            "schema": "forest",
            "hyper": {"n_trees": model.hyper.n_trees,
                      "max_depth": model.hyper.max_depth,
                      "min_leaf": model.hyper.min_leaf,
                      "feat_frac": model.hyper.feat_frac},
            "seed": model.seed,
            "n_features": model.n_features,
            "trees": [{
                "feature": _arr(t.feature), "threshold": _arr(t.threshold),
                "left": _arr(t.left), "right": _arr(t.right),
                "value": _arr(t.value),
            } for t in model.trees],
        }
    elif isinstance(model, MlpModel):
        payload = {
            "schema": "mlp",
            "weights": [_arr(w) for w in model.weights],
            "biases": [_arr(b) for b in model.biases],
            "x_mean": _arr(model.x_mean), "x_std": _arr(model.x_std),
            "y_mean": model.y_mean, "y_std": model.y_std,
        }
    elif isinstance(model, SvrModel):
        payload = {
            "schema": "svr",
            "sv_x": _arr(model.sv_x), "dual_coef": _arr(model.dual_coef),
            "bias": model.bias, "gamma": model.gamma,
            "epsilon": model.epsilon, "c": model.c,
            "x_mean": _arr(model.x_mean), "x_std": _arr(model.x_std),
            "y_mean": model.y_mean, "y_std": model.y_std,
        }
    elif isinstance(model, Ar1Model):
        payload = {
            "schema": "ar1",
            "phi": model.phi, "intercept": model.intercept, "n_fit": model.n_fit,
        }
    else:
        raise DatasetError(f"cannot persist model of type {type(model).__name__}")
    payload["version"] = FORMAT_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise DatasetError(f"unsupported model file version {version!r}")
    schema = payload.get("schema")
    if schema == "forest":
        trees = tuple(Tree(
            feature=np.asarray(t["feature"], dtype=np.int64),
            threshold=np.asarray(t["threshold"], dtype=float),
            left=np.asarray(t["left"], dtype=np.int64),
            right=np.asarray(t["right"], dtype=np.int64),
            value=np.asarray(t["value"], dtype=np.int64),
        ) for t in payload["trees"])
        return ForestModel(trees=trees, hyper=RfHyper(**payload["hyper"]),
                           seed=payload["seed"],
                           n_features=payload["n_features"])
    if schema == "mlp":
        return MlpModel(
            weights=tuple(np.asarray(w, dtype=float) for w in payload["weights"]),
            biases=tuple(np.asarray(b, dtype=float) for b in payload["biases"]),
            x_mean=np.asarray(payload["x_mean"], dtype=float),
            x_std=np.asarray(payload["x_std"], dtype=float),
            y_mean=payload["y_mean"], y_std=payload["y_std"])
    if schema == "svr":
        sv_x = np.asarray(payload["sv_x"], dtype=float)
        if sv_x.size == 0:
            sv_x = np.zeros((0, len(payload["x_mean"])))
        return SvrModel(
            sv_x=sv_x,
            dual_coef=np.asarray(payload["dual_coef"], dtype=float),
            bias=payload["bias"], gamma=payload["gamma"],
            epsilon=payload["epsilon"], c=payload["c"],
            x_mean=np.asarray(payload["x_mean"], dtype=float),
            x_std=np.asarray(payload["x_std"], dtype=float),
            y_mean=payload["y_mean"], y_std=payload["y_std"])
    if schema == "ar1":
        return Ar1Model(phi=payload["phi"], intercept=payload["intercept"],
                        n_fit=payload["n_fit"])
    raise DatasetError(f"unknown model schema {schema!r}")
