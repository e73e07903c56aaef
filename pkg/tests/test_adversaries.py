from __future__ import annotations

import pytest

from evolab import adversaries as A
from evolab import catalog as cat
from evolab import learners as L
from evolab.core import CapabilityError, SpecError, Stream
from evolab.dimensions import evolution_complexity
from evolab.engine import run_game
from evolab.trees import TrajectoryTree


def test_tree_adversary_forces_branching_mistakes():
    fam = cat.bool_mod2(2)
    adv = A.TreeDeterministic(fam, T=6)
    for name in ("alg1", "soa", "halving", "persistence"):
        rep = run_game(L.build_learner(name, fam), adv)
        assert rep.mistakes >= adv.B == evolution_complexity(fam, 6)[0]
        assert rep.certificate["realizable"]


def test_tree_adversary_rejects_unshattered_tree():
    fam = cat.identity(2)
    with pytest.raises(SpecError):
        A.TreeDeterministic(fam, TrajectoryTree([[0], [0, 1]]))


def test_random_path_is_reproducible_and_realizable():
    fam = cat.bool_threshold(2)
    adv = A.TreeRandomPath(fam, T=5)
    s1, s2 = adv.sample(3), adv.sample(3)
    assert s1.states == s2.states
    assert fam.is_realizable(s1)[0]


def test_adaptive_adversary_cannot_presample():
    adv = A.TreeDeterministic(cat.bool_mod2(2), T=3)
    with pytest.raises(CapabilityError):
        adv.sample(0)


@pytest.mark.parametrize("r", [1, 2])
def test_lowrank_forcing_r_plus_one(r):
    fam = cat.lowrank_linear(r + 2, r)
    adv = A.LowRankForcing(fam)
    rep = run_game(L.LinearSpan(fam), adv)
    assert rep.mistakes >= r + 1
    assert rep.certificate["realizable"] and rep.certificate["rank"] <= r


@pytest.mark.parametrize("variant,fam", [("mod2", cat.bool_mod2(2)), ("threshold", cat.bool_threshold(2))])
def test_boolean_forcing_streams_are_realizable(variant, fam):
    adv = A.BooleanForcing(fam, variant)
    rep = run_game(L.Alg1(fam), adv)
    assert rep.certificate["realizable"]
    assert rep.mistakes >= 1


def test_littlestone_block_certificate():
    fam = cat.markovian_tightness(6)
    adv = A.LittlestoneBlock(fam)
    assert adv.T == 2 * adv.r - 1
    for seed in range(20):
        s = adv.sample(seed)
        assert s.T == adv.T
        assert adv.certificate(s, seed)["ok"]


def test_markovian_tightness_horizon():
    adv = A.MarkovianTightness(d=3, k=3)
    assert adv.T == 2 * 3 * 3 - 1
    with pytest.raises(SpecError):
        A.MarkovianTightness(d=3, k=2)


def test_two_function_stream_shape():
    fam = cat.thresholds_grid(2)
    adv = A.TwoFunction(fam, 20)
    s = adv.sample(1)
    assert s.T == 20 and s.states == adv.sample(1).states


def test_member_flow_and_fixed_stream():
    fam = cat.bool_mod2(2)
    adv = A.MemberFlow(fam, 5, x0=1, member=7)
    s = adv.sample(0)
    assert list(s.states) == fam.flow(7, 1, 5)
    rep = run_game(L.FixedMember(fam, member=7), s)
    assert rep.mistakes == 0


def test_separation_flow_stream_shape():
    fam = cat.separation(6, 12)
    adv = A.SeparationFlow(fam, 12)
    s = adv.sample(4)
    assert s.x0 == (fam.ones, 0)
    assert [abs(z) for _, z in s.states] == list(range(1, 13))
    assert all(theta == fam.ones for theta, _ in s.states)
    assert s.states == adv.sample(4).states
    assert fam.flow_comparator(s) == fam.brute_force(s, flow=True)
    with pytest.raises(SpecError):
        A.SeparationFlow(fam, 13)


def test_unknown_adversary():
    with pytest.raises(SpecError):
        A.build_adversary("nope", cat.bool_mod2(2))
