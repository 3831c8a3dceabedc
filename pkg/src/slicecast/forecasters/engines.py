"""Engine dispatch and the on-disk model format.

A model file is UTF-8 JSON::

    {"format": "slicecast-model/1", "engine": "lstm" | "hw" | "naive",
     "app_id": ..., "view": ..., "split": [train, test],
     "columns": [...], "window_len": L,
     "feature_scaler": {"mean": [...], "std": [...]},
     "target_scaler": {"mean": [..], "std": [..]},
     "lstm": {"n_features": F, "hidden": H, "arrays": {"W_i": [[...]], ...}},
     "hw": {"level": .., "trend": .., "seasonals": [...], "alpha": .., ...},
     "season": m}

Only the keys relevant to the engine are present. Floats are written with
``repr`` precision, so a reloaded model reproduces forecasts bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable


from ..errors import DataError
from ..features import FeatureMatrix, Scaler, SplitSpec, TargetSeries, apply_scaler, fit_scaler, split
from .base import Forecast
from .baselines import HwModel, holt_winters_fit, holt_winters_forecast, optimize_smoothing, seasonal_naive
from .lstm import LstmParams, TrainConfig, lstm_train, make_windows, rolling_forecast

ENGINES = ("lstm", "hw", "naive")
MODEL_FORMAT = "slicecast-model/1"


@dataclass(frozen=True)
class EngineConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    hw_season: int = 168
    hw_smoothing: tuple[float, float, float] | None = None  # None: fit by least squares
    naive_season: int = 168


@dataclass
class TrainedModel:
    engine: str
    app_id: str
    view: str
    split: SplitSpec
    columns: tuple[str, ...] = ()
    window_len: int = 0
    feature_scaler: Scaler | None = None
    target_scaler: Scaler | None = None
    lstm: LstmParams | None = None
    hw: HwModel | None = None
    season: int = 0

    def forecast(self, features: FeatureMatrix | None, target: TargetSeries | None) -> Forecast:
        spec = self.split
        if self.engine == "lstm":
            if features is None:
                raise DataError("the LSTM engine needs the feature matrix")
            if features.column_names != self.columns:
                raise DataError("feature columns differ from those the model was trained on")
            scaled = apply_scaler(self.feature_scaler, features)
            return rolling_forecast(self.lstm, scaled, self.target_scaler, spec, self.window_len,
                                    self.app_id, self.view)
        if self.engine == "hw":
            return Forecast(self.app_id, self.view, holt_winters_forecast(self.hw, spec.test_periods),
                            start=spec.train_periods)
        if self.engine == "naive":
            if target is None:
                raise DataError("the naive engine needs the target series")
            return seasonal_naive(target, spec, self.season, view=self.view)
        raise DataError(f"unknown engine {self.engine!r}")

    def to_dict(self) -> dict:
        d = {"format": MODEL_FORMAT, "engine": self.engine, "app_id": self.app_id, "view": self.view,
             "split": [self.split.train_periods, self.split.test_periods]}
        if self.engine == "lstm":
            d.update(columns=list(self.columns), window_len=self.window_len,
                     feature_scaler=self.feature_scaler.to_dict(),
                     target_scaler=self.target_scaler.to_dict(), lstm=self.lstm.to_dict())
        elif self.engine == "hw":
            d["hw"] = self.hw.to_dict()
        else:
            d["season"] = self.season
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError(f"not a {MODEL_FORMAT} file")
        engine = d["engine"]
        m = cls(engine, d["app_id"], d["view"], SplitSpec(*d["split"]))
        if engine == "lstm":
            m.columns = tuple(d["columns"])
            m.window_len = int(d["window_len"])
            m.feature_scaler = Scaler.from_dict(d["feature_scaler"])
            m.target_scaler = Scaler.from_dict(d["target_scaler"])
            m.lstm = LstmParams.from_dict(d["lstm"])
        elif engine == "hw":
            m.hw = HwModel.from_dict(d["hw"])
        elif engine == "naive":
            m.season = int(d["season"])
        else:
            raise DataError(f"unknown engine {engine!r}")
        return m

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "TrainedModel":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: invalid model file ({exc})") from None


def fit_model(engine: str, features: FeatureMatrix | None, target: TargetSeries, spec: SplitSpec,
              cfg: EngineConfig = EngineConfig(), view: str = "",
              on_epoch: Callable[[int, float], None] | None = None) -> TrainedModel:
    """Fit one engine on the training part of ``target`` (and ``features`` for the LSTM)."""
    spec.check(len(target))
    train_y = target.values[:spec.train_periods]
    if engine == "lstm":
        if features is None:
            raise DataError("the LSTM engine needs the feature matrix")
        parts = split(features, target, spec)
        fs = fit_scaler(parts.train_features)
        ts = fit_scaler(train_y.reshape(-1, 1))
        x = fs.transform(parts.train_features.values)
        y = ts.transform(train_y.reshape(-1, 1)).reshape(-1)
        L = cfg.train.window_len
        params = lstm_train(make_windows(x, y, L), cfg.train, on_epoch=on_epoch)
        return TrainedModel("lstm", target.app_id, view, spec, features.column_names, L, fs, ts, params)
    if engine == "hw":
        m = cfg.hw_season
        alpha, beta, gamma = cfg.hw_smoothing or optimize_smoothing(train_y, m)
        return TrainedModel("hw", target.app_id, view, spec,
                            hw=holt_winters_fit(train_y, m, alpha, beta, gamma))
    if engine == "naive":
        if spec.train_periods < cfg.naive_season:
            raise DataError(f"training window ({spec.train_periods}) shorter than season ({cfg.naive_season})")
        return TrainedModel("naive", target.app_id, view, spec, season=cfg.naive_season)
    raise ValueError(f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}")


def fit_and_forecast(engine: str, features: FeatureMatrix | None, target: TargetSeries,
                     spec: SplitSpec, cfg: EngineConfig = EngineConfig(), view: str = "",
                     ) -> tuple[TrainedModel, Forecast]:
    model = fit_model(engine, features, target, spec, cfg, view)
    return model, model.forecast(features, target)

