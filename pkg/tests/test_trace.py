import io
import random

import numpy as np
import pytest
from hypothesis import given, settings

from slicecast.errors import TraceFormatError
from slicecast.trace import HEADER, Trace, TraceMeta, TraceRecord, TileCoord, load_trace, summarize, write_trace
from conftest import make_trace, small_traces

HEADER_LINE = ",".join(HEADER) + "\n"


def load_text(text):
    return load_trace(io.BytesIO(text.encode()))


def dump(trace):
    buf = io.BytesIO()
    write_trace(trace, buf)
    return buf.getvalue().decode()


def test_header_only_file_gives_empty_trace():
    t = load_text(HEADER_LINE)
    assert len(t) == 0
    assert summarize(t) == TraceMeta(0, 0, 0, 0, 0, 0)


def test_single_row_meta():
    t = load_text(HEADER_LINE + "0,u1,c1,0,0,a1,100,10\n")
    m = t.meta
    assert (m.n_users, m.n_cells, m.n_apps, m.n_tiles, m.total_traffic_bytes) == (1, 1, 1, 1, 110)
    assert m.duration_periods == 1


def test_negative_bytes_names_the_line():
    text = HEADER_LINE + "0,u1,c1,0,0,a1,100,10\n1,u1,c1,0,0,a1,-5,10\n"
    with pytest.raises(TraceFormatError) as err:
        load_text(text)
    assert err.value.line == 3
    assert "line 3" in str(err.value)


@pytest.mark.parametrize("row, fragment", [
    ("0,u1,c1,0,0,a1,100\n", "line 2"),
    ("x,u1,c1,0,0,a1,100,10\n", "line 2"),
    ("0,,c1,0,0,a1,100,10\n", "line 2"),
    ("0,u1,c1,0,0,a1,1.5,10\n", "line 2"),
])
def test_malformed_rows_report_line(row, fragment):
    with pytest.raises(TraceFormatError, match=fragment):
        load_text(HEADER_LINE + row)


def test_bad_header_rejected():
    with pytest.raises(TraceFormatError, match="line 1"):
        load_text("period,user,cell\n")


def test_duplicate_keys_are_kept():
    row = "0,u1,c1,0,0,a1,100,10\n"
    t = load_text(HEADER_LINE + row + row)
    assert len(t) == 2
    assert t.meta.total_traffic_bytes == 220


def test_summarize_hand_counts():
    t = make_trace([
        (0, "u1", "c1", 0, 0, "a1", 1, 0),
        (1, "u1", "c2", 1, 0, "a1", 1, 0),
        (2, "u1", "c2", 1, 0, "a2", 1, 0),
    ])
    m = summarize(t)
    assert (m.n_users, m.n_cells, m.n_apps, m.n_tiles, m.duration_periods) == (1, 2, 2, 2, 3)


def test_total_traffic_twice_110():
    t = make_trace([(0, "u1", "c1", 0, 0, "a1", 100, 10)] * 2)
    assert summarize(t).total_traffic_bytes == 220


def test_empty_trace_writes_header_only():
    assert dump(Trace.empty()) == HEADER_LINE


def test_two_records_written_in_period_order():
    t = make_trace([(5, "u1", "c1", 0, 0, "a1", 1, 2), (2, "u2", "c1", 0, 0, "a1", 3, 4)])
    lines = dump(t).splitlines()
    assert lines[1:] == ["2,u2,c1,0,0,a1,3,4", "5,u1,c1,0,0,a1,1,2"]


def test_sorted_by_period_then_user():
    t = make_trace([(1, "u2", "c", 0, 0, "a", 0, 0), (1, "u1", "c", 0, 0, "a", 0, 0),
                    (0, "u3", "c", 0, 0, "a", 0, 0)])
    assert [(r.period, r.user_id) for r in t.records] == [(0, "u3"), (1, "u1"), (1, "u2")]


def test_trace_is_immutable():
    t = make_trace([(0, "u1", "c1", 0, 0, "a1", 1, 0)])
    with pytest.raises(AttributeError):
        t.period = np.zeros(1, dtype=np.int64)
    with pytest.raises(ValueError):
        t.dl_bytes[0] = 7


def test_record_invariants():
    with pytest.raises(ValueError):
        TraceRecord(0, "u", "c", TileCoord(0, 0), "a", -1, 0)
    with pytest.raises(ValueError):
        TraceRecord(0, "", "c", TileCoord(0, 0), "a", 1, 0)


def test_text_stream_and_path(tmp_path):
    t = make_trace([(0, "u1", "c1", 0, 0, "a1", 7, 1), (3, "u2", "c9", 4, 2, "b", 0, 0)])
    path = tmp_path / "t.csv"
    write_trace(t, path)
    assert load_trace(path) == t
    assert load_trace(io.StringIO(path.read_text())) == t


@settings(max_examples=60, deadline=None)
@given(small_traces())
def test_round_trip(rows):
    t = make_trace(rows)
    assert load_text(dump(t)) == t
    assert load_text(dump(t)).records == t.records


@settings(max_examples=60, deadline=None)
@given(small_traces())
def test_summary_matches_brute_force_and_is_order_free(rows):
    t = make_trace(rows)
    expect = TraceMeta(
        duration_periods=max(r[0] for r in rows) + 1,
        n_users=len({r[1] for r in rows}),
        n_cells=len({r[2] for r in rows}),
        n_apps=len({r[5] for r in rows}),
        n_tiles=len({(r[3], r[4]) for r in rows}),
        total_traffic_bytes=sum(r[6] + r[7] for r in rows),
    )
    assert summarize(t) == expect
    shuffled = rows[:]
    random.Random(len(rows)).shuffle(shuffled)
    assert summarize(make_trace(shuffled)) == expect
    assert summarize(t) == summarize(t)
