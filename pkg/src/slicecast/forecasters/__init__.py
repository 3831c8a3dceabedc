from .base import Forecast
from .baselines import HwModel, holt_winters_fit, holt_winters_forecast, optimize_smoothing, seasonal_naive
from .engines import ENGINES, EngineConfig, TrainedModel, fit_and_forecast, fit_model
from .lstm import (
    LstmParams,
    TrainConfig,
    WindowedDataset,
    lstm_forward,
    lstm_loss_grad,
    lstm_predict,
    lstm_train,
    make_windows,
    rolling_forecast,
)

__all__ = [
    "ENGINES", "EngineConfig", "Forecast", "HwModel", "LstmParams", "TrainConfig", "TrainedModel",
    "WindowedDataset", "fit_and_forecast", "fit_model", "holt_winters_fit", "holt_winters_forecast",
    "lstm_forward", "lstm_loss_grad", "lstm_predict", "lstm_train", "make_windows",
    "optimize_smoothing", "rolling_forecast", "seasonal_naive",
]
