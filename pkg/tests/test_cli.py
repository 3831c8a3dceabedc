import json
import re

import pytest

from slicecast.cli import main
from slicecast.trace import load_trace, summarize

ERROR_LINE = re.compile(r'^slicecast: error: code=(\d) kind=(\w+) message=".*"$')

SMALL = """
seed = 4
apps_under_study = ["video", "social"]
views = ["mno", "vertical"]
split = "504:168"
agg = 16

[generator]
n_users = 12
n_cells = 4

[train]
window_len = 6
hidden = 4
epochs = 2
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def assert_error(err, code):
    lines = err.strip().splitlines()
    assert len(lines) == 1, err
    m = ERROR_LINE.match(lines[0])
    assert m and int(m.group(1)) == code


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(SMALL)
    return p


@pytest.fixture
def trace_csv(tmp_path, cfg, capsys):
    out = tmp_path / "t.csv"
    assert run(capsys, "generate", "--config", cfg, "--out", out)[0] == 0
    return out


def test_summarize_matches_library(capsys, trace_csv):
    code, out, _ = run(capsys, "summarize", "--trace", trace_csv, "--json")
    assert code == 0
    assert json.loads(out) == summarize(load_trace(trace_csv)).as_dict()
    code, out, _ = run(capsys, "summarize", "--trace", trace_csv)
    assert "Unique users" in out and "Total traffic (bytes)" in out


def test_staged_pipeline_round_trips(capsys, tmp_path, trace_csv, cfg):
    f, y = tmp_path / "f.csv", tmp_path / "y.csv"
    assert run(capsys, "features", "--trace", trace_csv, "--view", "joint", "--app", "video",
               "--agg", 16, "--out", f, "--target-out", y)[0] == 0
    reports = []
    for engine in ("lstm", "hw", "naive"):
        m, fc, r = (tmp_path / f"{engine}.{ext}" for ext in ("json", "csv", "report.json"))
        assert run(capsys, "train", "--features", f, "--target", y, "--engine", engine, "--config", cfg,
                   "--view", engine, "--split", "504:168", "--model-out", m)[0] == 0
        assert run(capsys, "forecast", "--model", m, "--features", f, "--target", y, "--out", fc)[0] == 0
        assert fc.read_text().splitlines()[0] == "period,yhat"
        assert len(fc.read_text().splitlines()) == 169
        code, out, _ = run(capsys, "evaluate", "--actual", y, "--forecast", fc, "--view", engine, "--out", r)
        assert code == 0 and json.loads(out)["n"] == 168
        reports += ["--report", r]
    comp, scat, svg = tmp_path / "c.csv", tmp_path / "s.csv", tmp_path / "s.svg"
    code, out, _ = run(capsys, "compare", *reports, "--out", comp, "--scatter-out", scat, "--svg", svg)
    assert code == 0
    assert len(comp.read_text().splitlines()) == 4
    assert scat.read_text().splitlines()[0] == "app,view,w,u"
    assert svg.read_text().startswith("<svg")


def test_forecast_is_deterministic(capsys, tmp_path, trace_csv, cfg):
    f, y = tmp_path / "f.csv", tmp_path / "y.csv"
    run(capsys, "features", "--trace", trace_csv, "--view", "vertical", "--app", "social", "--agg", 16,
        "--out", f, "--target-out", y)
    texts = []
    for k in range(2):
        m, fc = tmp_path / f"m{k}.json", tmp_path / f"fc{k}.csv"
        run(capsys, "train", "--features", f, "--target", y, "--config", cfg, "--model-out", m)
        run(capsys, "forecast", "--model", m, "--features", f, "--out", fc)
        texts.append((m.read_text(), fc.read_text()))
    assert texts[0] == texts[1]


@pytest.mark.parametrize("argv", [
    ["evaluate", "--forecast", "f.csv", "--out", "r.json"],
    ["nonsense"],
    ["summarize", "--trace", "t.csv", "--unknown-flag"],
    ["features", "--trace", "t.csv", "--view", "vertical", "--out", "x.csv"],
    ["train", "--target", "y.csv", "--split", "504", "--model-out", "m.json"],
    ["-v", "-q", "summarize", "--trace", "t.csv"],
    [],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert_error(err, 1)


def test_data_errors(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("period,user_id,cell_id,tile_x,tile_y,app_id,dl_bytes,ul_bytes\n0,u,c,0,0,a,-5,0\n")
    code, _, err = run(capsys, "summarize", "--trace", bad)
    assert code == 2 and "line 2" in err
    assert_error(err, 2)
    code, _, err = run(capsys, "summarize", "--trace", tmp_path / "missing.csv")
    assert code == 2
    assert_error(err, 2)


def test_divergence_exit_code(capsys, tmp_path, trace_csv):
    f, y = tmp_path / "f.csv", tmp_path / "y.csv"
    run(capsys, "features", "--trace", trace_csv, "--view", "mno", "--app", "video", "--out", f, "--target-out", y)
    t = tmp_path / "t.toml"
    t.write_text("[train]\nwindow_len = 4\nhidden = 4\nepochs = 3\nlearning_rate = 1e300\nclip_norm = 1e300\n")
    code, _, err = run(capsys, "train", "--features", f, "--target", y, "--config", t, "--model-out",
                       tmp_path / "m.json")
    assert code == 3
    assert_error(err, 3)


def test_help_lists_every_subcommand(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for cmd in ("generate", "features", "train", "forecast", "evaluate", "compare", "experiment", "summarize"):
        assert cmd in out
    code, out, _ = run(capsys, "train", "--help")
    for flag in ("--features", "--target", "--split", "--engine", "--config", "--model-out"):
        assert flag in out


def test_experiment_command(capsys, tmp_path, cfg):
    code, out, _ = run(capsys, "experiment", "--config", cfg, "--out-dir", tmp_path / "run")
    assert code == 0
    assert "video" in out
    assert json.loads((tmp_path / "run" / "report.json").read_text())["meta"]["seed"] == 4
