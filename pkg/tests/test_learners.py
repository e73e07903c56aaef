from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import catalog as cat
from evolab import learners as L
from evolab.core import BudgetError, CapabilityError, SpecError, Stream
from evolab.dimensions import evolution_complexity, littlestone_dimension
from evolab.engine import exhaustive_realizable_suite
from strategies import small_families


def _run(learner, stream, seed=0):
    sess = learner.start(stream.x0, stream.T, seed)
    preds = []
    for x in stream.states:
        preds.append(sess.predict())
        sess.observe(x)
    return preds, sess


def test_session_protocol_order():
    sess = L.Persistence(cat.bool_mod2(2)).start(0, 3)
    with pytest.raises(SpecError):
        sess.observe(1)
    sess.predict()
    with pytest.raises(SpecError):
        sess.predict()


def test_unknown_learner():
    with pytest.raises(SpecError):
        L.build_learner("oracle", cat.bool_mod2(2))


def test_enumerated_learners_refuse_implicit_families():
    with pytest.raises(CapabilityError):
        L.Alg1(cat.separation(3, 9))
    names = L.compatible_learners(cat.separation(3, 9))
    assert set(names) == {"separation_realizable", "persistence", "constant", "random_member"}


@pytest.mark.parametrize("tie_break", ["lowest", "highest"])
@pytest.mark.parametrize("fam", [cat.bool_mod2(2), cat.bool_threshold(2), cat.switching(1, 6), cat.thresholds_grid(4)])
def test_alg1_mistake_bound(fam, tie_break):
    T = 6
    learner = L.Alg1(fam, tie_break=tie_break, instrument=True)
    res = exhaustive_realizable_suite(fam, learner, T)
    assert res.worst <= evolution_complexity(fam, T)[0]
    assert res.potential_violations == 0
    assert res.fallbacks == 0


def test_alg1_argmax_domains_agree():
    fam = cat.bool_threshold(2)
    a = L.Alg1(fam)
    b = L.Alg1(fam, argmax_domain="all")
    for f in range(fam.member_count):
        for x0 in range(fam.size):
            s = Stream(x0, fam.flow(f, x0, 5))
            assert _run(a, s)[0] == _run(b, s)[0]


@pytest.mark.parametrize("m", [4, 7, 8])
def test_soa_bounded_by_littlestone(m):
    fam = cat.thresholds_grid(m)
    res = exhaustive_realizable_suite(fam, L.SOA(fam), 6)
    assert res.worst <= littlestone_dimension(fam)[0]


def test_halving_log_bound():
    fam = cat.bool_mod2(2)
    res = exhaustive_realizable_suite(fam, L.Halving(fam), 8)
    assert res.worst <= 4


def test_fallback_on_inconsistent_stream():
    fam = cat.identity(3)
    preds, sess = _run(L.Alg1(fam), Stream(0, [1, 1, 2]))
    assert sess.flags["fallback"] and sess.flags["fallback_round"] == 1
    assert preds == [0, 1, 1]


def test_expert_count_formula():
    fam = cat.bool_mod2(2)
    C = evolution_complexity(fam, 12)[0]
    K = fam.max_projection
    preds = L.expert_predictions(fam, 0, 12)
    assert preds.shape[0] == L.expert_count(C, K, 12) == 1105


def test_expert_budget():
    with pytest.raises(BudgetError):
        L.expert_predictions(cat.bool_mod2(2), 0, 12, budget=10)


def test_flow_experts_replicate_every_flow():
    fam = cat.bool_mod2(2)
    T = 6
    for x0 in range(fam.size):
        rows = {tuple(r) for r in L.expert_predictions(fam, x0, T).tolist()}
        for f in range(fam.member_count):
            assert tuple(fam.flow(f, x0, T)) in rows


def test_ew_is_seeded():
    fam = cat.bool_mod2(2)
    s = Stream(0, [1, 2, 3, 0, 1, 2])
    ew = L.EWMarkovian(fam)
    assert _run(ew, s, 5)[0] == _run(ew, s, 5)[0]


def test_linear_span_realizable_bound():
    fam = cat.lowrank_linear(3, 1)
    W = ((1, 1, 0), (1, 1, 0), (0, 0, 0))
    x0 = (1, 0, 0)
    s = Stream(x0, fam.flow(W, x0, 5))
    preds, _ = _run(L.LinearSpan(fam), s)
    assert sum(p != x for p, x in zip(preds, s.states)) <= 2


def test_separation_realizable_learner_is_exact_after_learning():
    fam = cat.separation(4, 30)
    sigma = "-+-+"
    x0 = (fam.ones, 0)
    s = Stream(x0, fam.flow(sigma, x0, 20))
    preds, _ = _run(L.SeparationRealizable(fam), s)
    assert sum(p != x for p, x in zip(preds, s.states)) <= 8


@settings(max_examples=40, deadline=None)
@given(small_families(), st.data())
def test_alg1_bound_property(fam, data):
    T = data.draw(st.integers(1, 5))
    f = data.draw(st.integers(0, fam.member_count - 1))
    x0 = data.draw(st.integers(0, fam.size - 1))
    s = Stream(x0, fam.flow(f, x0, T))
    preds, sess = _run(L.Alg1(fam, instrument=True), s)
    assert sum(p != x for p, x in zip(preds, s.states)) <= evolution_complexity(fam, T, x0)[0]
    assert sess.flags.get("potential_violations", 0) == 0
