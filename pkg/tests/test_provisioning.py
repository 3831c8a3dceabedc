import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicecast.errors import DataError
from slicecast.provisioning import (EvalEntry, EvalReport, compare_scenarios, evaluate, rmse, scale_up_count,
                                    unused_capability, write_rows_csv)


def brute(y, yhat):
    n = len(y)
    sq = w = 0.0
    u = 0
    for a, b in zip(y, yhat):
        sq += (a - b) * (a - b)
        if b > a:
            w += b - a
        if a > b:
            u += 1
    return math.sqrt(sq / n), w, u


def test_hand_case():
    y, yhat = [4, 4, 4], [5, 3, 6]
    assert rmse(y, yhat) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert unused_capability(y, yhat) == 3
    assert scale_up_count(y, yhat) == 1
    e = evaluate("a", "mno", y, yhat)
    assert (e.n, e.w, e.u) == (3, 3, 1)
    assert e.u_frac == pytest.approx(1 / 3) and e.w_frac == pytest.approx(0.25)


def test_rmse_hand_value():
    assert rmse([1, 2, 3], [1, 2, 5]) == pytest.approx(1.1547005383792515, rel=1e-12)


def test_perfect_forecast():
    y = np.random.default_rng(0).uniform(0, 10, 50)
    e = evaluate("a", "joint", y, y.copy())
    assert (e.rmse, e.w, e.u) == (0.0, 0.0, 0)


def test_ties_are_not_scale_ups():
    assert scale_up_count([1, 2, 3], [1, 2, 3]) == 0


def test_errors():
    with pytest.raises(DataError):
        rmse([1, 2], [1])
    with pytest.raises(DataError):
        rmse([], [])
    with pytest.raises(DataError):
        evaluate("a", "mno", [1, 2, 3], [1, 2])


def test_zero_total_leaves_w_frac_absent():
    e = evaluate("a", "mno", [0, 0], [1, 0])
    assert e.w_frac is None and e.w == 1
    assert json.loads(EvalReport([e]).to_json())["entries"][0]["w_frac"] is None


def test_headroom_scales_capacity():
    e = evaluate("a", "mno", [10, 10], [10, 9], headroom=1.2)
    assert e.w == pytest.approx(2 + 0.8) and e.u == 0
    assert e.rmse == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ValueError):
        evaluate("a", "mno", [1], [1], headroom=0)


def test_scale_up_asymmetry():
    y = np.random.default_rng(1).uniform(1e6, 1e7, 168)
    eps = 1e-3
    e = evaluate("a", "vertical", y, y - eps)
    assert e.u == 168 and e.u_frac == 1.0 and e.w == 0.0
    assert e.rmse == pytest.approx(eps, rel=1e-6)


def test_against_brute_force_on_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 501))
        y = rng.uniform(0, 1e6, n)
        yhat = y + rng.normal(0, 1e5, n)
        r, w, u = brute(y.tolist(), yhat.tolist())
        assert rmse(y, yhat) == pytest.approx(r, rel=1e-9)
        assert unused_capability(y, yhat) == pytest.approx(w, rel=1e-9, abs=1e-9)
        assert scale_up_count(y, yhat) == u


vectors = st.integers(1, 60).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1e6), min_size=n, max_size=n),
    st.lists(st.floats(0, 1e6), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_decomposition(pair):
    y, yhat = map(np.array, pair)
    under = float(np.sum(np.maximum(0, y - yhat)))
    w = unused_capability(y, yhat)
    assert float(np.sum(yhat - y)) == pytest.approx(w - under, rel=1e-9, abs=1e-6)
    if scale_up_count(y, yhat) == 0:
        assert float(np.sum(yhat - y)) == pytest.approx(w, rel=1e-9, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(vectors, st.sampled_from([0.5, 2.0, 3.0, 1e3]))
def test_positive_scaling(pair, c):
    y, yhat = map(np.array, pair)
    assert scale_up_count(c * y, c * yhat) == scale_up_count(y, yhat)
    assert rmse(c * y, c * yhat) == pytest.approx(c * rmse(y, yhat), rel=1e-9, abs=1e-9)
    assert unused_capability(c * y, c * yhat) == pytest.approx(c * unused_capability(y, yhat), rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(vectors, st.data())
def test_raising_one_forecast_is_monotone(pair, data):
    y, yhat = map(np.array, pair)
    j = data.draw(st.integers(0, len(y) - 1))
    bump = data.draw(st.floats(0, 1e6))
    higher = yhat.copy()
    higher[j] += bump
    assert scale_up_count(y, higher) <= scale_up_count(y, yhat)
    assert unused_capability(y, higher) >= unused_capability(y, yhat)


@settings(max_examples=100, deadline=None)
@given(vectors, st.floats(0.1, 1e4))
def test_shift_in_over_provisioned_region(pair, c):
    y, yhat = map(np.array, pair)
    over = np.maximum(y, yhat)
    assert unused_capability(y, over + c) == pytest.approx(unused_capability(y, over) + len(y) * c, rel=1e-9)


def entry(app, view, w=1.0, u=0):
    return EvalEntry(app, view, 10, 1.0, w, 0.1, u, u / 10)


def test_compare_rows_and_order():
    report = EvalReport()
    for app in ("c", "a", "b"):
        for view in ("joint", "mno", "vertical"):
            report.add(entry(app, view))
    table, scatter = compare_scenarios(report)
    assert len(table) == 9
    assert [(r["app"], r["view"]) for r in table[:3]] == [("a", "mno"), ("a", "vertical"), ("a", "joint")]
    assert list(scatter[0]) == ["app", "view", "w", "u"]
    assert list(table[0]) == ["app", "view", "rmse", "w", "w_frac", "u", "u_frac"]


def test_compare_empty_report():
    with pytest.raises(DataError):
        compare_scenarios(EvalReport())


def test_duplicate_pairs_rejected():
    report = EvalReport([entry("a", "mno")])
    with pytest.raises(DataError):
        report.add(entry("a", "mno"))


def test_report_round_trip_and_merge(tmp_path):
    r = EvalReport([entry("a", "mno", 2.5, 3)], meta={"seed": 1})
    r.save(tmp_path / "r.json")
    again = EvalReport.load(tmp_path / "r.json")
    assert again.entries == r.entries and again.meta == r.meta
    assert again.to_json() == r.to_json()
    merged = EvalReport.merge([r, EvalReport([entry("b", "joint")])])
    assert len(merged.entries) == 2
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(DataError):
        EvalReport.load(tmp_path / "bad.json")


def test_scatter_csv_header(tmp_path):
    _, scatter = compare_scenarios(EvalReport([entry("a", "mno")]))
    write_rows_csv(scatter, ("app", "view", "w", "u"), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "app,view,w,u"
