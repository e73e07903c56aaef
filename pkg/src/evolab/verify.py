"""Verification suites: one function per acceptance criterion.

Every check returns a ``CheckResult`` whose ``detail`` is deterministic JSON
(no timings), so reruns with the same seeds can be compared byte for byte.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from evolab import catalog as cat
from evolab.adversaries import (
    LittlestoneBlock,
    MarkovianTightness,
    MemberFlow,
    RandomStream,
    SeparationFlow,
    SignStream,
    SwitchingTightness,
    LowRankForcing,
    BooleanForcing,
    TreeDeterministic,
    TreeRandomPath,
    TwoFunction,
)
from evolab.core import EvolutionFamily, Stream
from evolab.dimensions import (
    branching_dimension,
    complexity_profile,
    ds_dimension,
    evolution_complexity,
    littlestone_dimension,
    sandwich_check,
)
from evolab.engine import exhaustive_realizable_suite, hoeffding_radius, monte_carlo, run_game
from evolab.learners import (
    SOA,
    Alg1,
    Constant,
    EWMarkovian,
    FixedMember,
    FlowExperts,
    LinearSpan,
    Persistence,
    RandomMember,
    SeparationRealizable,
    SignedCappedLearner,
    UniformRandom,
    build_learner,
    compatible_learners,
    expert_count,
    expert_predictions,
)
from evolab.trees import brute_force_max_branching

# regression constant: exact C_4(bool_threshold(2)), computed by the recursion and
# confirmed by brute force
BOOL_THRESHOLD_2_C4 = 2

GAMMAS = (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2))


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: Dict[str, Any]

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.criterion:02d} {self.name}"

    def to_dict(self) -> Dict[str, Any]:
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed, "detail": self.detail}


def _mc(summary: Any) -> Dict[str, Any]:
    return {"mean": summary.mean, "ci": summary.ci, "stderr": summary.stderr, "trials": summary.trials,
            "certificate_failures": summary.certificate_failures}


def _enumerated_catalog() -> List[EvolutionFamily]:
    return cat.catalog_sweep()


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def check_oracle(seed: int = 0) -> CheckResult:
    """Recursion vs brute force on random and catalog families, depths 0..3, every root."""
    rng = np.random.default_rng(seed)
    all2 = list(itertools.product(range(2), repeat=2))
    cases: List[EvolutionFamily] = []
    for _ in range(200):
        k = int(rng.integers(1, 5))
        rows = [all2[i] for i in sorted(rng.choice(4, size=k, replace=False))]
        cases.append(cat.from_table(rows))
    for _ in range(100):
        k = int(rng.integers(1, 6))
        cases.append(cat.from_table(rng.integers(0, 3, size=(k, 3)).tolist()))
    catalog = [f for f in _enumerated_catalog() if f.member_count <= 20]
    mismatches = []
    compared = 0
    for idx, fam in enumerate(cases + catalog):
        for d in range(4):
            for x in range(fam.size):
                a = evolution_complexity(fam, d, root=x)[0]
                b = brute_force_max_branching(fam, d, root=x)[0]
                compared += 1
                if a != b:
                    mismatches.append({"case": idx, "family": fam.name, "depth": d, "root": x, "recursion": a, "brute": b})
    return CheckResult(1, "oracle-equivalence", not mismatches, {
        "random_x2": 200, "random_x3": 100, "catalog": [f.spec() for f in catalog],
        "comparisons": compared, "mismatches": mismatches[:10],
    })


# ---------------------------------------------------------------------------
# realizable setting
# ---------------------------------------------------------------------------


def check_bool_mod2() -> CheckResult:
    vals = {}
    for n in (2, 3):
        fam = cat.bool_mod2(n)
        for T in (n, n + 1, n + 2):
            vals[f"n={n},T={T}"] = evolution_complexity(fam, T)[0]
    ok = all(v == int(k[2]) for k, v in vals.items())
    return CheckResult(2, "bool-mod2-complexity", ok, {"values": vals})


def check_bool_threshold() -> CheckResult:
    fam = cat.bool_threshold(2)
    c = evolution_complexity(fam, 4)[0]
    ok = 2 <= c <= 4 and c == BOOL_THRESHOLD_2_C4
    return CheckResult(3, "bool-threshold-complexity", ok, {"C_4": c, "frozen": BOOL_THRESHOLD_2_C4})


def check_alg1_upper() -> CheckResult:
    fam = cat.bool_mod2(2)
    res = exhaustive_realizable_suite(fam, Alg1(fam, instrument=True), 6)
    ok = res.worst <= 2 and res.potential_violations == 0 and res.runs == 64 and res.fallbacks == 0
    return CheckResult(4, "alg1-realizable-upper", ok, res.to_dict())


def _c6_witness() -> Any:
    fam = cat.bool_mod2(2)
    return fam, evolution_complexity(fam, 6)[1]


def check_tree_deterministic() -> CheckResult:
    fam, tree = _c6_witness()
    adv = TreeDeterministic(fam, tree)
    out = {}
    ok = adv.B == 2
    for learner in (Alg1(fam), SOA(fam), Persistence(fam), FixedMember(fam, 0)):
        rep = run_game(learner, adv)
        out[learner.id] = {"mistakes": rep.mistakes, "realizable": rep.certificate["realizable"]}
        ok &= rep.mistakes >= 2 and rep.certificate["realizable"]
    return CheckResult(5, "tree-adversary-deterministic", ok, {"B": adv.B, "learners": out})


def check_tree_random(trials: int = 2000, seed: int = 6) -> CheckResult:
    fam, tree = _c6_witness()
    adv = TreeRandomPath(fam, tree)
    out = {}
    ok = True
    for learner in (Alg1(fam), UniformRandom(fam)):
        s = monte_carlo(learner, adv, trials, seed)
        out[learner.id] = _mc(s)
        ok &= s.mean >= adv.B / 2 - s.ci and s.certificate_failures == 0
    return CheckResult(6, "tree-adversary-random-path", ok, {"B": adv.B, "learners": out})


def check_lowrank(seed: int = 10) -> CheckResult:
    detail: Dict[str, Any] = {}
    ok = True
    rng = np.random.default_rng(seed)
    for r in (1, 2):
        fam = cat.lowrank_linear(3, r, 2)
        adv = LowRankForcing(fam, T=r + 1)
        forced = {}
        for name in compatible_learners(fam):
            learner = build_learner(name, fam)
            if not learner.deterministic:
                continue
            rep = run_game(learner, adv)
            forced[name] = rep.mistakes
            ok &= rep.certificate["realizable"]
            ok &= rep.mistakes == r + 1 if name == "linear_span" else rep.mistakes >= r + 1
        worst = 0
        for _ in range(100):
            W = fam.sample_member(rng)
            x0 = tuple(int(v) for v in rng.integers(-2, 3, size=3))
            stream = Stream(x0, fam.flow(W, x0, 20))
            ok &= fam.consistent(W, stream)
            worst = max(worst, run_game(LinearSpan(fam), stream).mistakes)
        ok &= worst <= r + 1
        detail[f"r={r}"] = {"forcing_mistakes": forced, "random_streams_worst": worst}
    return CheckResult(10, "lowrank-linear", ok, detail)


# ---------------------------------------------------------------------------
# dimensions
# ---------------------------------------------------------------------------


def check_sandwich() -> CheckResult:
    rows = {}
    ok = True
    for fam in _enumerated_catalog():
        key = json.dumps(fam.spec(), sort_keys=True)
        good = True
        for T in range(7):
            s_ok, _ = sandwich_check(fam, T, GAMMAS)
            good &= s_ok
        bdim, stab = branching_dimension(fam)
        prof = complexity_profile(fam, max(6, stab + 2))
        mono = all(a <= b for a, b in zip(prof, prof[1:]))
        stable = all(v == bdim for v in prof[stab:])
        rows[key] = {"sandwich": good, "monotone": mono, "stabilizes": stable, "branching": bdim, "from_T": stab}
        ok &= good and mono and stable
    return CheckResult(7, "sandwich-and-stabilization", ok, {"families": rows})


def check_theorem3() -> CheckResult:
    out = {}
    ok = True
    sets = {"{0,2}": [0, 2], "{1,2,4}": [1, 2, 4], "{1,2,4,8}&[0,8)": [s for s in (1, 2, 4, 8) if s < 8]}
    for name, S in sets.items():
        fam = cat.f_s_family(S, 8)
        for T in range(2, 6):
            got = evolution_complexity(fam, T)[0]
            want = max(len([s for s in S if n <= s <= n + T - 1]) for n in range(0, 9))
            out[f"S={name},T={T}"] = {"C_T": got, "formula": want}
            ok &= got == want
    return CheckResult(8, "complexity-of-f_s", ok, out)


def check_littlestone() -> CheckResult:
    out = {}
    ok = True
    for fam in _enumerated_catalog():
        c = evolution_complexity(fam, 4)[0]
        L = littlestone_dimension(fam)[0]
        out[json.dumps(fam.spec(), sort_keys=True)] = {"C_4": c, "L": L}
        ok &= c <= L
    grid = {}
    for m in (4, 8, 16):
        fam = cat.thresholds_grid(m)
        grid[m] = {"C_4": evolution_complexity(fam, 4)[0], "L": littlestone_dimension(fam)[0]}
        ok &= grid[m]["C_4"] == 1
    ok &= grid[16]["L"] > grid[4]["L"]
    return CheckResult(9, "complexity-vs-littlestone", ok, {"catalog": out, "thresholds_grid": grid})


def check_ds() -> CheckResult:
    a = ds_dimension(cat.full(2))
    b = ds_dimension(cat.identity(2))
    c = ds_dimension(cat.thresholds_grid(4), cap=3)
    ok = a.value == 2 and b.value == 0 and c.value == 1 and a.exact and b.exact and c.exact
    return CheckResult(11, "ds-dimension", ok, {"full_2": a.to_dict(), "singleton": b.to_dict(), "thresholds_grid_4": c.to_dict()})


# ---------------------------------------------------------------------------
# agnostic Markovian
# ---------------------------------------------------------------------------


def check_ew_upper(streams: int = 50, seeds: int = 500, T: int = 200, seed: int = 12, workers: Optional[int] = None) -> CheckResult:
    fam = cat.bool_mod2(2)
    bound = math.sqrt(2 * T * math.log(fam.member_count))
    gen = RandomStream(fam, T)
    means = []
    ok = True
    for i in range(streams):
        stream = gen.sample(seed * 1000 + i)
        s = monte_carlo(EWMarkovian(fam), stream, seeds, seed + i, metric="markovian", workers=workers)
        means.append(s.mean)
        ok &= s.mean <= bound + s.ci
    ci = hoeffding_radius(T, seeds)
    return CheckResult(12, "ew-markovian-upper", ok, {"bound": bound, "ci": ci, "max_mean": max(means), "means": means})


def check_ldim_lower(trials: int = 3000, seed: int = 13) -> CheckResult:
    fam = cat.markovian_tightness(6)
    adv = LittlestoneBlock(fam)
    out = {}
    ok = True
    for learner in (EWMarkovian(fam), SOA(fam)):
        s = monte_carlo(learner, adv, trials, seed, metric="markovian")
        out[learner.id] = _mc(s)
        ok &= s.mean >= 6 / 18 - s.ci and s.certificate_failures == 0
    return CheckResult(13, "littlestone-block-lower", ok, {"L": adv.d, "r": adv.r, "learners": out})


def check_sqrt_lower(trials: int = 5000, trend_trials: int = 1000, seed: int = 14) -> CheckResult:
    fam = cat.thresholds_grid(2)
    s = monte_carlo(EWMarkovian(fam), TwoFunction(fam, 256), trials, seed, metric="markovian")
    bound = math.sqrt(256) / (16 * math.sqrt(3))
    lo = monte_carlo(EWMarkovian(fam), TwoFunction(fam, 64), trend_trials, seed + 1, metric="markovian")
    hi = monte_carlo(EWMarkovian(fam), TwoFunction(fam, 1024), trend_trials, seed + 2, metric="markovian")
    ok = s.mean >= bound - s.ci and hi.mean > lo.mean
    return CheckResult(14, "two-function-sqrt-lower", ok, {"bound": bound, "T256": _mc(s), "T64": _mc(lo), "T1024": _mc(hi)})


def check_markovian_tightness(trials: int = 3000, seed: int = 15) -> CheckResult:
    d, k = 3, 9
    adv = MarkovianTightness(d=d, k=k)
    T = adv.T
    bound = 0.25 * math.sqrt((T + 1) * d) - (d - 1)
    s = monte_carlo(EWMarkovian(adv.family), adv, trials, seed, metric="markovian")
    return CheckResult(15, "markovian-tightness", s.mean >= bound - s.ci, {"T": T, "bound": bound, "ew_markovian": _mc(s)})


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------


def check_flow_upper(streams: int = 50, seeds: int = 200, T: int = 12, seed: int = 16) -> CheckResult:
    fam = cat.bool_mod2(2)
    C = evolution_complexity(fam, T)[0]
    K = fam.max_projection
    bound = C + math.sqrt(2 * C * T * math.log(T * K / C))
    counts = {fam.format_state(x): int(expert_predictions(fam, x, T).shape[0]) for x in range(fam.size)}
    formula = expert_count(C, K, T)
    ok = all(v == formula for v in counts.values())
    gen = RandomStream(fam, T)
    means, scan_ok = [], True
    for i in range(streams):
        stream = gen.sample(seed * 1000 + i)
        s = monte_carlo(FlowExperts(fam), stream, seeds, seed + i, metric="flow")
        means.append(s.mean)
        ok &= s.mean <= bound + s.ci
        # the best expert is at least as good as the best member flow
        P = expert_predictions(fam, stream.x0, T)
        best_expert = int((P != np.asarray(stream.states)).sum(axis=1).min())
        scan_ok &= best_expert <= fam.flow_comparator(stream)[0]
    # every realizable flow is replicated exactly by some expert
    for f in range(fam.member_count):
        for x0 in range(fam.size):
            P = expert_predictions(fam, x0, T)
            scan_ok &= bool(((P == np.asarray(fam.flow(f, x0, T))).all(axis=1)).any())
    ok &= scan_ok
    return CheckResult(16, "flow-experts-upper", ok, {
        "C_T": C, "K": K, "bound": bound, "expert_counts": counts, "formula": formula,
        "best_expert_scan": scan_ok, "max_mean": max(means), "means": means,
    })


def check_flow_lower(trials: int = 2000, seed: int = 17) -> CheckResult:
    fam, tree = _c6_witness()
    adv = TreeRandomPath(fam, tree)
    s = monte_carlo(FlowExperts(fam), adv, trials, seed, metric="flow")
    m = monte_carlo(FlowExperts(fam), adv, trials, seed, metric="mistakes")
    C = evolution_complexity(fam, 6)[0]
    ok = s.mean >= C / 2 - s.ci and s.values == m.values and s.certificate_failures == 0
    return CheckResult(17, "flow-experts-lower", ok, {"C_T": C, "flow_regret": _mc(s), "comparator_zero": s.values == m.values})


def check_flow_tightness(seed: int = 18) -> CheckResult:
    p, w = 3, 8
    sc = cat.signed_capped(p, w)
    s1 = monte_carlo(SignedCappedLearner(sc), SignStream(sc, w), 1000, seed, metric="flow")
    sw = cat.switching(1, 18)
    adv = SwitchingTightness(sw, p=1, k=9)
    s2 = monte_carlo(EWMarkovian(sw), adv, 2000, seed + 1, metric="flow")
    lower = math.sqrt(2 * 18 / 8)
    profile = {}
    prof_ok = True
    for pp in (0, 1, 2):
        fam = cat.switching(pp, 8)
        cap = cat.signed_capped(pp, 8)
        for T in range(1, 6):
            c_sw = evolution_complexity(fam, T)[0]
            c_sc = evolution_complexity(cap, T)[0]
            profile[f"p={pp},T={T}"] = {"switching": c_sw, "signed_capped": c_sc}
            prof_ok &= c_sw == min(pp + 1, T) and c_sc == min(pp, T)
    ok = s1.mean <= p / 2 + s1.ci and s2.mean >= lower - s2.ci and prof_ok
    return CheckResult(18, "flow-tightness-pair", ok, {
        "signed_capped": {"bound": p / 2, **_mc(s1)},
        "switching": {"bound": lower, **_mc(s2)},
        "complexity": profile,
    })


def check_separation(seed: int = 19) -> CheckResult:
    rng = np.random.default_rng(seed)
    ok = True
    fam = cat.separation(4, 40)
    learner = SeparationRealizable(fam)
    worst = 0
    for _ in range(100):
        sigma = fam.sample_member(rng)
        x0 = ("".join(rng.choice(["+", "-"], size=4)), int(rng.integers(-10, 11)))
        worst = max(worst, run_game(learner, Stream(x0, fam.flow(sigma, x0, 30))).mistakes)
    ok &= worst <= 3
    small = cat.separation(3, 12)
    ex_worst = 0
    for idx in range(8):
        sigma = small.member_from_index(idx)
        for theta in ("".join(c) for c in itertools.product("+-", repeat=3)):
            for z in range(-12, 13):
                x0 = (theta, z)
                rep = run_game(SeparationRealizable(small), Stream(x0, small.flow(sigma, x0, 9)))
                ex_worst = max(ex_worst, rep.mistakes)
    ok &= ex_worst <= 3
    big = cat.separation(60, 60)
    adv = SeparationFlow(big, 60)
    out = {}
    for name in compatible_learners(big):
        s = monte_carlo(build_learner(name, big), adv, 1000, seed + 1, metric="flow")
        out[name] = _mc(s)
        ok &= s.mean >= 10 - s.ci
    return CheckResult(19, "separation", ok, {
        "realizable_worst_m4": worst, "exhaustive_worst_m3": ex_worst, "witnessed_against": sorted(out), "flow_adversary": out,
    })


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

CHECKS: Dict[int, Callable[[], CheckResult]] = {
    1: check_oracle,
    2: check_bool_mod2,
    3: check_bool_threshold,
    4: check_alg1_upper,
    5: check_tree_deterministic,
    6: check_tree_random,
    7: check_sandwich,
    8: check_theorem3,
    9: check_littlestone,
    10: check_lowrank,
    11: check_ds,
    12: check_ew_upper,
    13: check_ldim_lower,
    14: check_sqrt_lower,
    15: check_markovian_tightness,
    16: check_flow_upper,
    17: check_flow_lower,
    18: check_flow_tightness,
    19: check_separation,
}

SUITES: Dict[str, List[int]] = {
    "oracle": [1],
    "realizable": [2, 3, 4, 5, 6, 10],
    "dimensions": [7, 8, 9, 11],
    "agnostic-markovian": [12, 13, 14, 15],
    "flow": [16, 17, 18, 19],
}
SUITES["all"] = sorted(c for ids in SUITES.values() for c in ids)


def to_json(results: List[CheckResult]) -> str:
    return json.dumps([r.to_dict() for r in results], sort_keys=True, indent=2) + "\n"


def run_suite(name: str) -> List[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    return [CHECKS[c]() for c in SUITES[name]]


def check_reproducibility(first: Optional[Dict[int, str]] = None) -> CheckResult:
    """Rerun every check and compare JSON bytes with ``first`` (computed here when omitted)."""
    if first is None:
        first = {c: to_json([fn()]) for c, fn in CHECKS.items()}
    diffs = [c for c, fn in CHECKS.items() if to_json([fn()]) != first[c]]
    return CheckResult(20, "reproducibility", not diffs, {"checked": sorted(first), "differing": diffs})
