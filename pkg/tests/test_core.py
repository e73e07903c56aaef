from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab.catalog import bool_mod2, from_table, signed_capped
from evolab.core import (
    BudgetError,
    EvolutionFamily,
    SpecError,
    StateSpace,
    Stream,
    default_budget,
    signed_range,
)
from strategies import small_families


def test_state_space_codecs_roundtrip():
    bits = StateSpace.bits(3)
    for i in range(bits.size):
        assert bits.parse(bits.format(i)) == i
    frac = StateSpace.fractions([Fraction(0), Fraction(1, 2), Fraction(1)])
    assert frac.format(1) == "1/2"
    assert frac.parse("1/2") == 1


def test_state_space_rejects_bad_input():
    with pytest.raises(SpecError):
        StateSpace(0)
    with pytest.raises(SpecError):
        StateSpace(2, "bits")
    with pytest.raises(SpecError):
        StateSpace(3).check(3)


def test_signed_range_order():
    assert signed_range(2) == [0, 1, -1, 2, -2]


def test_family_deduplicates_rows_keeping_first():
    fam = from_table([[1, 0], [0, 0], [1, 0]], size=2)
    assert fam.member_count == 2
    assert fam.table.tolist() == [[1, 0], [0, 0]]


def test_family_rejects_out_of_range_entries():
    with pytest.raises(SpecError):
        from_table([[0, 2]], size=2)


def test_flow_and_iterate_agree():
    fam = signed_capped(2, 6)
    for f in range(fam.member_count):
        flow = fam.flow(f, 0, 5)
        assert flow[-1] == fam.iterate(f, 0, 5)
        assert len(flow) == 5


def test_budget_env(monkeypatch):
    monkeypatch.setenv("EVOLAB_BUDGET", "1e3")
    assert default_budget() == 1000
    monkeypatch.setenv("EVOLAB_BUDGET", "lots")
    with pytest.raises(SpecError):
        default_budget()
    assert issubclass(BudgetError, Exception)


def test_comparators_on_known_stream():
    fam = bool_mod2(2)
    f = 3
    stream = Stream(0, fam.flow(f, 0, 6))
    assert fam.flow_comparator(stream)[0] == 0
    assert fam.markovian_comparator(stream)[0] == 0
    ok, vs = fam.is_realizable(stream)
    assert ok and f in vs.members()


@settings(max_examples=60, deadline=None)
@given(small_families(), st.data())
def test_masks_partition_members(fam: EvolutionFamily, data):
    # for every x, the masks over y partition the member set
    for x in range(fam.size):
        total = 0
        for y in range(fam.size):
            assert total & fam.masks[x][y] == 0
            total |= fam.masks[x][y]
        assert total == fam.full_mask
        assert sorted(set(fam.full_projection[x])) == list(fam.full_projection[x])


@settings(max_examples=60, deadline=None)
@given(small_families(), st.data())
def test_comparator_bounds(fam: EvolutionFamily, data):
    T = data.draw(st.integers(0, 6))
    xs = data.draw(st.lists(st.integers(0, fam.size - 1), min_size=T + 1, max_size=T + 1))
    stream = Stream(xs[0], xs[1:])
    mk, mf = fam.markovian_comparator(stream)[0], fam.flow_comparator(stream)[0]
    assert 0 <= mk <= T and 0 <= mf <= T
    # brute-force minima over members
    losses_m = [sum(fam.apply(f, a) != b for a, b in stream.pairs()) for f in range(fam.member_count)]
    losses_f = [sum(y != x for y, x in zip(fam.flow(f, stream.x0, T), stream.states)) for f in range(fam.member_count)]
    assert mk == min(losses_m) and mf == min(losses_f)
    ok, _ = fam.is_realizable(stream)
    assert ok == (mk == 0)


@settings(max_examples=40, deadline=None)
@given(small_families(), st.data())
def test_version_space_restrict_matches_filter(fam: EvolutionFamily, data):
    x = data.draw(st.integers(0, fam.size - 1))
    y = data.draw(st.integers(0, fam.size - 1))
    vs = fam.version().restrict(x, y)
    assert vs.members() == [f for f in range(fam.member_count) if fam.apply(f, x) == y]


def test_stream_prefix():
    s = Stream(0, [1, 2, 3])
    assert s.T == 3
    assert list(s.prefix(2).states) == [1, 2]
    assert s.pairs() == [(0, 1), (1, 2), (2, 3)]


def test_numpy_table_is_readonly():
    fam = bool_mod2(2)
    assert isinstance(fam.table, np.ndarray)
    with pytest.raises(ValueError):
        fam.table[0, 0] = 1
