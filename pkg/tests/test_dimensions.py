from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import catalog as cat
from evolab.core import SpecError
from evolab.dimensions import (
    branching_dimension,
    complexity_profile,
    dimension_report,
    ds_dimension,
    evolution_complexity,
    evolution_dimension,
    is_littlestone_shattered,
    littlestone_dimension,
    sandwich_check,
)
from strategies import small_families


def test_bool_mod2_profile():
    assert complexity_profile(cat.bool_mod2(2), 5) == [0, 1, 2, 2, 2, 2]


def test_bool_mod2_3_complexity():
    assert evolution_complexity(cat.bool_mod2(3), 6)[0] == 3


@pytest.mark.parametrize("m,expected", [(4, 2), (7, 2), (8, 3), (16, 4)])
def test_thresholds_littlestone(m, expected):
    value, tree = littlestone_dimension(cat.thresholds_grid(m))
    assert value == expected
    assert is_littlestone_shattered(cat.thresholds_grid(m), tree)


def test_markovian_tightness_littlestone():
    assert littlestone_dimension(cat.markovian_tightness(6))[0] == 6


@pytest.mark.parametrize("p,T", [(1, 1), (1, 3), (2, 2), (2, 5)])
def test_switching_complexity(p, T):
    assert evolution_complexity(cat.switching(p, 6), T)[0] == min(p + 1, T)


@pytest.mark.parametrize("p,T", [(2, 1), (2, 4), (3, 5)])
def test_signed_capped_complexity(p, T):
    assert evolution_complexity(cat.signed_capped(p, 8), T)[0] == min(p, T)


def test_ds_values():
    assert ds_dimension(cat.full(2)).value == 2
    assert ds_dimension(cat.identity(2)).value == 0
    assert ds_dimension(cat.thresholds_grid(4)).value == 1


def test_gamma_must_be_rational():
    with pytest.raises(SpecError):
        evolution_dimension(cat.bool_mod2(2), 0.5)
    with pytest.raises(SpecError):
        evolution_dimension(cat.bool_mod2(2), 0)


def test_dimension_report_serializes():
    rep = dimension_report(cat.bool_mod2(2), 4, [Fraction(1, 2), 1])
    d = rep.to_dict()
    assert d["family"] == {"family": "bool_mod2", "params": {"n": 2}}
    assert d["C"] == [0, 1, 2, 2, 2]
    assert d["E_gamma"] == {"1/2": 4, "1": 2}
    assert d["branching_dim"] == 2
    assert all(row["ok"] for row in d["sandwich"])


@settings(max_examples=40, deadline=None)
@given(small_families(), st.integers(0, 6))
def test_profile_monotone_and_bounded(fam, T):
    prof = complexity_profile(fam, T)
    assert prof[0] == 0
    assert all(a <= b for a, b in zip(prof, prof[1:]))
    assert all(c <= t for t, c in enumerate(prof))
    dim, _ = branching_dimension(fam)
    assert prof[-1] <= dim
    assert dim <= littlestone_dimension(fam)[0]


@settings(max_examples=40, deadline=None)
@given(small_families(), st.integers(0, 8))
def test_sandwich_holds(fam, T):
    ok, rows = sandwich_check(fam, T, [Fraction(1, 4), Fraction(1, 2), 1, 2])
    assert ok, [r.to_dict() for r in rows]


@settings(max_examples=40, deadline=None)
@given(small_families(), st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(2)]))
def test_evolution_dimension_definition(fam, gamma):
    e = evolution_dimension(fam, gamma)
    if e:
        assert evolution_complexity(fam, e)[0] >= gamma * e
