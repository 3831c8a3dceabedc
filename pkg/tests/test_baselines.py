import numpy as np
import pytest

from slicecast.errors import DataError
from slicecast.features import SplitSpec, TargetSeries, target_series
from slicecast.forecasters import HwModel, holt_winters_fit, holt_winters_forecast, optimize_smoothing, seasonal_naive
from slicecast.synth import AppProfile, GeneratorConfig, diurnal_profile, generate_trace


def textbook_hw(y, m, alpha, beta, gamma):
    """Additive Holt-Winters written directly from the smoothing equations."""
    level = sum(y[:m]) / m
    trend = (sum(y[m:2 * m]) / m - level) / m
    s = [v - level for v in y[:m]]
    for t in range(m, len(y)):
        prev_level = level
        level = alpha * (y[t] - s[t - m]) + (1 - alpha) * (prev_level + trend)
        trend = beta * (level - prev_level) + (1 - beta) * trend
        s.append(gamma * (y[t] - level) + (1 - gamma) * s[t - m])
    return level, trend, s[-m:]


def test_seasonal_naive_index_arithmetic():
    y = TargetSeries("a", np.arange(672.0))
    fc = seasonal_naive(y, SplitSpec())
    assert len(fc) == 168 and fc.start == 504
    assert fc.values[0] == 336.0
    np.testing.assert_array_equal(fc.values, np.arange(336.0, 504.0))


def test_seasonal_naive_lag_one_uses_test_prefix():
    y = TargetSeries("a", np.arange(10.0))
    fc = seasonal_naive(y, SplitSpec(6, 4), season=1)
    assert fc.values.tolist() == [5, 6, 7, 8]


def test_seasonal_naive_periodic_identity():
    week = np.random.default_rng(0).uniform(0, 100, 168)
    y = TargetSeries("a", np.tile(week, 4))
    fc = seasonal_naive(y, SplitSpec())
    assert np.sqrt(np.mean((fc.values - y.values[504:]) ** 2)) == 0.0


def test_seasonal_naive_short_train():
    with pytest.raises(DataError):
        seasonal_naive(TargetSeries("a", np.ones(200)), SplitSpec(100, 100))


@pytest.mark.parametrize("seed", range(3))
def test_hw_matches_textbook_recurrences(seed):
    rng = np.random.default_rng(seed)
    m = 12
    y = 50 + 10 * np.sin(2 * np.pi * np.arange(120) / m) + rng.normal(0, 2, 120) + 0.1 * np.arange(120)
    a, b, g = rng.uniform(0.05, 0.95, 3)
    model = holt_winters_fit(y, m, a, b, g)
    level, trend, seas = textbook_hw(y.tolist(), m, a, b, g)
    assert model.level == pytest.approx(level, rel=1e-10)
    assert model.trend == pytest.approx(trend, rel=1e-8, abs=1e-12)
    np.testing.assert_allclose(model.seasonals, seas, rtol=1e-9, atol=1e-10)
    h = np.arange(1, 30)
    expect = np.maximum(level + h * trend + np.array(seas)[(h - 1) % m], 0)
    np.testing.assert_allclose(holt_winters_forecast(model, 29), expect, rtol=1e-9)


def test_constant_series():
    model = holt_winters_fit(np.full(100, 7.25), 10, 0.4, 0.2, 0.3)
    assert model.level == 7.25 and model.trend == 0.0
    np.testing.assert_array_equal(model.seasonals, 0.0)
    np.testing.assert_array_equal(holt_winters_forecast(model, 50), 7.25)


def test_linear_series_exact_with_unit_smoothing():
    a, b = 3.0, 0.5
    n = 60
    y = a + b * np.arange(n)
    model = holt_winters_fit(y, 6, 1.0, 1.0, 0.0, initial_seasonals=np.zeros(6))
    h = np.arange(1, 25)
    np.testing.assert_allclose(holt_winters_forecast(model, 24), a + b * (n - 1 + h), atol=1e-6)


def test_deterministic_daily_series_from_generator():
    app = AppProfile("d", 1e6, diurnal_profile(), (1.0,) * 7)
    cfg = GeneratorConfig(n_users=30, noise_cv=0.0, apps=(app,), seed=2)
    y = target_series(generate_trace(cfg), "d").values
    amplitude = y.max() - y.min()
    for params in [(0.3, 0.05, 0.3), optimize_smoothing(y[:504], 24)]:
        fc = holt_winters_forecast(holt_winters_fit(y[:504], 24, *params), 168)
        assert np.sqrt(np.mean((fc - y[504:]) ** 2)) < 0.01 * amplitude


def test_forecast_is_clamped():
    model = HwModel(1.0, -1.0, np.zeros(4), 0.5, 0.5, 0.5)
    assert holt_winters_forecast(model, 5).tolist() == [0.0] * 5


def test_errors():
    with pytest.raises(DataError):
        holt_winters_fit(np.ones(30), 24, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        holt_winters_fit(np.ones(30), 1, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        HwModel(0, 0, np.zeros(4), 1.5, 0, 0)


def test_optimized_parameters_in_unit_box_and_beat_defaults():
    rng = np.random.default_rng(5)
    m = 24
    y = 100 + 20 * np.sin(2 * np.pi * np.arange(240) / m) + rng.normal(0, 3, 240)
    params = optimize_smoothing(y, m)
    assert all(0 <= p <= 1 for p in params)

    def sse(p):
        level = y[:m].mean()
        trend = (y[m:2 * m].mean() - level) / m
        seas = list(y[:m] - level)
        total = 0.0
        for t in range(m, len(y)):
            total += (y[t] - (level + trend + seas[t - m])) ** 2
            prev = level
            level = p[0] * (y[t] - seas[t - m]) + (1 - p[0]) * (prev + trend)
            trend = p[1] * (level - prev) + (1 - p[1]) * trend
            seas.append(p[2] * (y[t] - level) + (1 - p[2]) * seas[t - m])
        return total

    assert sse(params) <= sse((0.3, 0.01, 0.3)) + 1e-9


def test_model_dict_round_trip():
    model = holt_winters_fit(np.arange(50.0), 5, 0.3, 0.1, 0.2)
    again = HwModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(holt_winters_forecast(model, 12), holt_winters_forecast(again, 12))
