"""Uni-variate baselines: seasonal naive and additive Holt-Winters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import DataError
from ..features import SplitSpec, TargetSeries
from .base import Forecast


def seasonal_naive(target: TargetSeries, spec: SplitSpec, season: int = 168, view: str = "") -> Forecast:
    """Forecast test period j with the actual value one season earlier.

    For j >= season the lagged value lies inside the test window; it is taken
    from the actual series, so with ``season=1`` this is the lag-1 naive
    forecast.
    """
    spec.check(len(target))
    if season < 1:
        raise ValueError("season must be >= 1")
    if spec.train_periods < season:
        raise DataError(f"training window ({spec.train_periods}) shorter than season ({season})")
    t = spec.train_periods + np.arange(spec.test_periods)
    return Forecast(target.app_id, view, target.values[t - season], start=spec.train_periods)


@dataclass(frozen=True, eq=False)
class HwModel:
    """Additive Holt-Winters state after the last training observation.

    ``seasonals[k]`` is the component for training index ``n - m + k``
    (the last full season).
    """

    level: float
    trend: float
    seasonals: np.ndarray
    alpha: float
    beta: float
    gamma: float
    n_train: int = 0

    def __post_init__(self):
        s = np.asarray(self.seasonals, dtype=float)
        if s.size < 2:
            raise ValueError("season length must be >= 2")
        for name in ("alpha", "beta", "gamma"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "seasonals", s)

    @property
    def season(self) -> int:
        return len(self.seasonals)

    def to_dict(self) -> dict:
        return {"level": self.level, "trend": self.trend, "seasonals": self.seasonals.tolist(),
                "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "n_train": self.n_train}

    @classmethod
    def from_dict(cls, d: dict) -> "HwModel":
        return cls(float(d["level"]), float(d["trend"]), np.asarray(d["seasonals"], dtype=float),
                   float(d["alpha"]), float(d["beta"]), float(d["gamma"]), int(d.get("n_train", 0)))


def _hw_run(y: np.ndarray, m: int, alpha: float, beta: float, gamma: float,
            initial_seasonals: np.ndarray | None):
    first = y[:m]
    level = first.mean()
    trend = (y[m:2 * m].mean() - level) / m
    seasonals = first - level if initial_seasonals is None else np.asarray(initial_seasonals, dtype=float).copy()
    s = np.empty(len(y))
    s[:m] = seasonals
    sse = 0.0
    # error-correction form: a constant series stays exactly constant
    for t in range(m, len(y)):
        prior = level + trend
        err = y[t] - (prior + s[t - m])
        sse += err * err
        new_level = prior + alpha * (y[t] - s[t - m] - prior)
        trend = trend + beta * (new_level - level - trend)
        s[t] = s[t - m] + gamma * (y[t] - new_level - s[t - m])
        level = new_level
    return level, trend, s[-m:], sse


def holt_winters_fit(train: np.ndarray, season: int, alpha: float, beta: float, gamma: float,
                     initial_seasonals: np.ndarray | None = None) -> HwModel:
    """Run the additive recurrences over the training series.

    Level starts at the mean of the first season, trend at the difference of
    the first two season means divided by the season length, and seasonals at
    the first season's deviations from its mean unless ``initial_seasonals``
    is given.
    """
    y = np.asarray(train, dtype=float)
    if season < 2:
        raise ValueError("season must be >= 2")
    if len(y) < 2 * season:
        raise DataError(f"Holt-Winters needs at least {2 * season} training periods, got {len(y)}")
    if initial_seasonals is not None and len(initial_seasonals) != season:
        raise ValueError("initial_seasonals must have one entry per season position")
    level, trend, seasonals, _ = _hw_run(y, season, alpha, beta, gamma, initial_seasonals)
    return HwModel(float(level), float(trend), seasonals, alpha, beta, gamma, len(y))


def optimize_smoothing(train: np.ndarray, season: int,
                       start: tuple[float, float, float] = (0.3, 0.01, 0.3)) -> tuple[float, float, float]:
    """Smoothing parameters minimizing in-sample one-step squared error."""
    y = np.asarray(train, dtype=float)
    if len(y) < 2 * season:
        raise DataError(f"Holt-Winters needs at least {2 * season} training periods, got {len(y)}")
    scale = max(float(np.std(y)), 1e-12)
    ys = y / scale

    def objective(p):
        return _hw_run(ys, season, *np.clip(p, 0.0, 1.0), None)[3]

    res = minimize(objective, np.asarray(start), method="L-BFGS-B", bounds=[(0.0, 1.0)] * 3)
    alpha, beta, gamma = (float(v) for v in np.clip(res.x, 0.0, 1.0))
    return alpha, beta, gamma


def holt_winters_forecast(model: HwModel, horizon: int) -> np.ndarray:
    """``level + h * trend + seasonal`` for h = 1..horizon, clamped at 0."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    h = np.arange(1, horizon + 1)
    m = model.season
    # s_{T+h-m*ceil(h/m)} is seasonals[(h - 1) mod m] with the last season stored last
    seasonal = model.seasonals[(h - 1) % m]
    return np.maximum(model.level + h * model.trend + seasonal, 0.0)
