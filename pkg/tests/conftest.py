import numpy as np
import pytest
from hypothesis import strategies as st

from slicecast.trace import Trace, TraceRecord, TileCoord


def make_trace(rows):
    """rows: (period, user, cell, tx, ty, app, dl, ul) tuples."""
    return Trace.from_records(
        TraceRecord(p, u, c, TileCoord(x, y), a, dl, ul) for p, u, c, x, y, a, dl, ul in rows
    )


@st.composite
def small_traces(draw, max_records=40, duration=6, grid=6):
    n = draw(st.integers(1, max_records))
    row = st.tuples(
        st.integers(0, duration - 1),
        st.sampled_from(["u1", "u2", "u3", "u4"]),
        st.sampled_from(["c1", "c2", "c3"]),
        st.integers(0, grid - 1),
        st.integers(0, grid - 1),
        st.sampled_from(["a1", "a2", "a3"]),
        st.integers(0, 10**9),
        st.integers(0, 10**8),
    )
    rows = draw(st.lists(row, min_size=n, max_size=n))
    # pin the bounding box and duration so every draw has the same layout
    rows.append((duration - 1, "u1", "c1", grid - 1, grid - 1, "a1", 0, 0))
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
