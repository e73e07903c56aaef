from __future__ import annotations

from hypothesis import strategies as st

from evolab.catalog import from_table


@st.composite
def small_families(draw, max_states: int = 4, max_members: int = 5):
    n = draw(st.integers(1, max_states))
    m = draw(st.integers(1, max_members))
    rows = draw(st.lists(st.lists(st.integers(0, n - 1), min_size=n, max_size=n), min_size=m, max_size=m))
    return from_table(rows, size=n)
