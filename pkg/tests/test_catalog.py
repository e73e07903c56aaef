from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import catalog as cat
from evolab.core import SpecError, Stream
from evolab.exact import SpanMap, matvec, rank


def test_registry_builds_every_family():
    params = {
        "identity": {"size": 3},
        "full": {"size": 2},
        "table": {"table": [[0, 1], [1, 0]]},
        "random": {"size": 3, "members": 4, "seed": 1},
        "bool_mod2": {"n": 2},
        "bool_threshold": {"n": 2},
        "f_s": {"S": [0, 2], "w": 6},
        "signed_capped": {"p": 2, "w": 6},
        "switching": {"p": 1, "w": 6},
        "markovian_tightness": {"d": 3},
        "thresholds_grid": {"m": 4},
        "lowrank_linear": {"n": 3, "r": 1},
        "separation": {"m": 3, "zmax": 9},
    }
    assert set(params) == set(cat.REGISTRY)
    for name, p in params.items():
        assert cat.build_family(name, p).name


def test_unknown_family_and_bad_params():
    with pytest.raises(SpecError):
        cat.build_family("nope")
    with pytest.raises(SpecError):
        cat.build_family("bool_mod2", {"k": 2})
    with pytest.raises(SpecError):
        cat.bool_mod2(4)
    with pytest.raises(SpecError):
        cat.full(5)


def test_member_counts():
    assert cat.bool_mod2(2).member_count == 16
    assert cat.switching(1, 18).member_count == 36
    assert cat.thresholds_grid(7).member_count == 7
    assert cat.full(2).member_count == 4
    assert cat.identity(3).member_count == 1


def test_thresholds_grid_are_distinct_maps():
    fam = cat.thresholds_grid(5)
    rows = {tuple(r) for r in fam.table.tolist()}
    assert len(rows) == 5


def test_catalog_sweep_is_enumerated():
    for fam in cat.catalog_sweep():
        assert fam.enumerated and fam.member_count >= 1


def test_exact_rank_and_span():
    assert rank([[1, 2], [2, 4]]) == 1
    assert rank([[1, 0], [0, 1]]) == 2
    sm = SpanMap(2)
    assert sm.predict((1, 0)) is None
    sm.add((2, 0), (4, 2))
    assert sm.predict((1, 0)) == (2, 1)
    assert sm.predict((0, 1)) is None
    assert matvec([[1, 1], [0, 2]], (3, 4)) == (7, 8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_lowrank_samples_respect_rank(seed):
    fam = cat.lowrank_linear(4, 2)
    W = fam.sample_member(np.random.default_rng(seed))
    assert rank(W) <= 2
    assert fam.check_member(W) == W
    x = (1, -1, 0, 2)
    assert fam.parse_state(fam.format_state(x)) == x


def test_lowrank_rejects_full_rank_member():
    fam = cat.lowrank_linear(2, 1)
    with pytest.raises(SpecError):
        fam.check_member([[1, 0], [0, 1]])


def test_separation_dynamics():
    fam = cat.separation(3, 9)
    ones = "+++"
    x = (ones, 0)
    assert fam.apply("-+-", x) == (ones, -1)
    assert fam.apply("-+-", (ones, 2)) == ("-+-", -3)
    assert fam.apply("-+-", (ones, 9)) == (ones, 9)
    assert fam.member_index("-+-") == 0b101
    assert fam.member_from_index(0b101) == "-+-"
    assert fam.parse_state("+-+:-4") == ("+-+", -4)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_separation_comparators_match_brute_force(data):
    fam = cat.separation(3, 7)
    T = data.draw(st.integers(0, 9))
    thetas = st.text(alphabet="+-", min_size=3, max_size=3)
    states = st.tuples(thetas, st.integers(-7, 7))
    x0 = data.draw(states)
    xs = data.draw(st.lists(states, min_size=T, max_size=T))
    stream = Stream(x0, xs)
    assert fam.markovian_comparator(stream) == fam.brute_force(stream, flow=False)
    assert fam.flow_comparator(stream) == fam.brute_force(stream, flow=True)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**5 - 1), st.integers(0, 12))
def test_separation_own_flow_is_realizable(idx, T):
    fam = cat.separation(5, 20)
    sigma = fam.member_from_index(idx)
    x0 = (fam.ones, 0)
    stream = Stream(x0, fam.flow(sigma, x0, T))
    assert fam.flow_comparator(stream)[0] == 0
    assert fam.is_realizable(stream)[0]
