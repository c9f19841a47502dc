"""Learning algorithms: random-forest classification, MLP and SVR regression,
AR(1) forecasting, evaluation metrics, k-fold CV, and model persistence."""

from .ar1 import Ar1Model, ar1_fit, ar1_forecast
from .forest import ForestModel, RfHyper, rf_predict, rf_predict_batch, rf_train
from .metrics import (ConfusionMatrix, RegressionReport, confusion, kfold_cv,
                      mse, r_squared)
from .mlp import MlpModel, mlp_predict, mlp_train
from .persist import load_model, save_model
from .svr import SvrHyper, SvrModel, svr_predict, svr_train

__all__ = [
    "Ar1Model", "ar1_fit", "ar1_forecast",
    "ForestModel", "RfHyper", "rf_predict", "rf_predict_batch", "rf_train",
    "ConfusionMatrix", "RegressionReport", "confusion", "kfold_cv", "mse",
    "r_squared",
    "MlpModel", "mlp_predict", "mlp_train",
    "SvrHyper", "SvrModel", "svr_predict", "svr_train",
    "load_model", "save_model",
]
