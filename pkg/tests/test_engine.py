from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import adversaries as A
from evolab import catalog as cat
from evolab import learners as L
from evolab.core import BudgetError, SpecError, Stream
from evolab.engine import derive_seed, exhaustive_realizable_suite, hoeffding_radius, monte_carlo, run_game


def test_hoeffding_radius_value():
    assert hoeffding_radius(10, 200) == pytest.approx(10 * math.sqrt(math.log(40) / 400))
    with pytest.raises(SpecError):
        hoeffding_radius(10, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 10**4))
def test_derive_seed_is_role_separated(seed, index):
    assert derive_seed(seed, index, 0) == derive_seed(seed, index, 0)
    assert derive_seed(seed, index, 0) != derive_seed(seed, index, 1)


def test_run_game_report_fields():
    fam = cat.bool_mod2(2)
    s = Stream(0, fam.flow(5, 0, 6))
    rep = run_game(L.Persistence(fam), s)
    d = rep.to_dict()
    assert len(d["rounds"]) == 6
    assert d["mistakes"] == sum(r["mistake"] for r in d["rounds"])
    assert d["flow_comparator"] == 0 and d["flow_regret"] == d["mistakes"]
    assert d["guarantee"] == "oblivious adversary"
    json.dumps(d)


def test_adaptive_vs_randomized_is_flagged():
    fam = cat.bool_mod2(2)
    rep = run_game(L.EWMarkovian(fam), A.TreeDeterministic(fam, T=4))
    assert rep.guarantee.startswith("unverified")


def test_family_must_be_shared():
    with pytest.raises(SpecError):
        run_game(L.Persistence(cat.bool_mod2(2)), A.TreeDeterministic(cat.bool_mod2(2), T=3))


def test_monte_carlo_reproducible_and_summarized():
    fam = cat.bool_mod2(2)
    adv = A.RandomStream(fam, 10)
    a = monte_carlo(L.EWMarkovian(fam), adv, 30, seed=7, metric="markovian")
    b = monte_carlo(L.EWMarkovian(fam), adv, 30, seed=7, metric="markovian")
    assert a.values == b.values
    assert a.mean == pytest.approx(sum(a.values) / 30)
    assert a.ci == pytest.approx(hoeffding_radius(10, 30))
    assert json.dumps(a.to_dict(include_trials=True)) == json.dumps(b.to_dict(include_trials=True))


def test_monte_carlo_workers_match_serial():
    fam = cat.bool_mod2(2)
    adv = A.RandomStream(fam, 8)
    a = monte_carlo(L.UniformRandom(fam), adv, 12, seed=3)
    b = monte_carlo(L.UniformRandom(fam), adv, 12, seed=3, workers=2)
    assert a.values == b.values


def test_monte_carlo_rejects_bad_metric():
    fam = cat.bool_mod2(2)
    with pytest.raises(SpecError):
        monte_carlo(L.Persistence(fam), A.RandomStream(fam, 3), 2, metric="regret")


def test_suite_budget():
    fam = cat.bool_mod2(2)
    with pytest.raises(BudgetError):
        exhaustive_realizable_suite(fam, L.Alg1(fam), 6, budget=10)
