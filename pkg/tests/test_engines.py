import numpy as np
import pytest

from slicecast.errors import DataError
from slicecast.features import FeatureMatrix, SplitSpec, TargetSeries
from slicecast.forecasters import EngineConfig, TrainConfig, TrainedModel, fit_and_forecast, fit_model

SPEC = SplitSpec(96, 24)


@pytest.fixture
def data():
    t = np.arange(SPEC.total)
    y = 1000 + 300 * np.sin(2 * np.pi * t / 24) + np.random.default_rng(0).normal(0, 20, len(t))
    x = np.column_stack([y + 5, np.cos(2 * np.pi * t / 24)])
    return FeatureMatrix(("a", "b"), x), TargetSeries("app", y)


CFG = EngineConfig(train=TrainConfig(window_len=6, hidden=4, epochs=2), hw_season=24, naive_season=24)


@pytest.mark.parametrize("engine", ["lstm", "hw", "naive"])
def test_forecast_shape_and_reload(engine, data, tmp_path):
    features, target = data
    model, fc = fit_and_forecast(engine, features, target, SPEC, CFG, view="vertical")
    assert len(fc) == 24 and fc.start == 96
    assert np.all(fc.values >= 0) and np.all(np.isfinite(fc.values))
    model.save(tmp_path / "m.json")
    again = TrainedModel.load(tmp_path / "m.json")
    assert again.view == "vertical" and again.app_id == "app"
    np.testing.assert_array_equal(again.forecast(features, target).values, fc.values)


def test_lstm_scalers_use_training_rows_only(data):
    features, target = data
    model = fit_model("lstm", features, target, SPEC, CFG)
    np.testing.assert_allclose(model.target_scaler.mean, [target.values[:96].mean()], rtol=1e-12)
    np.testing.assert_allclose(model.feature_scaler.std, features.values[:96].std(axis=0), rtol=1e-12)
    # corrupting the test rows does not change the fit
    poisoned = FeatureMatrix(features.column_names, np.vstack([features.values[:96], features.values[96:] * 100]))
    other = fit_model("lstm", poisoned, TargetSeries("app", np.r_[target.values[:96], np.zeros(24)]), SPEC, CFG)
    np.testing.assert_array_equal(model.lstm.flatten(), other.lstm.flatten())


def test_engine_input_checks(data, tmp_path):
    features, target = data
    with pytest.raises(DataError):
        fit_model("lstm", None, target, SPEC, CFG)
    with pytest.raises(ValueError):
        fit_model("arima", features, target, SPEC, CFG)
    model = fit_model("lstm", features, target, SPEC, CFG)
    with pytest.raises(DataError):
        model.forecast(FeatureMatrix(("x", "y"), features.values), target)
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(DataError):
        TrainedModel.load(tmp_path / "bad.json")
