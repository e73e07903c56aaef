"""Game loop, exact regrets and seeded Monte Carlo estimation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from evolab.adversaries import Adversary, FixedStream
from evolab.core import BudgetError, CapabilityError, SpecError, Stream, default_budget, require_enumerated
from evolab.learners import Learner

METRICS = ("mistakes", "markovian", "flow")
DEFAULT_DELTA = 0.05


def derive_seed(seed: int, index: int, role: int) -> int:
    """Child seed for replica ``index``; role 0 is the learner, 1 the adversary.

    Uses numpy's SeedSequence hashing with spawn key (index, role), so child
    seeds are independent of how replicas are scheduled.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), int(role)))
    return int(ss.generate_state(1, np.uint64)[0])


def hoeffding_radius(T: int, trials: int, delta: float = DEFAULT_DELTA) -> float:
    """T sqrt(ln(2/delta) / (2 trials)): two-sided radius for means of [0, T] variables."""
    if trials < 1:
        raise SpecError("trials must be >= 1")
    return T * math.sqrt(math.log(2 / delta) / (2 * trials))


def play(learner: Learner, session_adv: Any, T: int, learner_seed: int) -> Tuple[Stream, List[Any], Dict[str, Any]]:
    """Run the protocol for T rounds; returns (stream, predictions, learner flags)."""
    sess = learner.start(session_adv.x0, T, learner_seed)
    preds = []
    for _ in range(T):
        p = sess.predict()
        x = session_adv.next(p)
        sess.observe(x)
        preds.append(p)
    return session_adv.stream(), preds, sess.flags


def _comparators(family: Any, stream: Stream) -> Dict[str, Optional[Tuple[int, Any]]]:
    caps = family.capabilities
    out: Dict[str, Optional[Tuple[int, Any]]] = {"markovian": None, "flow": None}
    if "markovian_comparator" in caps:
        out["markovian"] = family.markovian_comparator(stream)
    if "flow_comparator" in caps:
        out["flow"] = family.flow_comparator(stream)
    return out


@dataclass
class GameReport:
    learner: Dict[str, Any]
    adversary: Dict[str, Any]
    family: Dict[str, Any]
    learner_seed: int
    adversary_seed: int
    x0: str
    predictions: List[str]
    truths: List[str]
    mistake_flags: List[int]
    mistakes: int
    markovian_comparator: Optional[int] = None
    markovian_regret: Optional[int] = None
    flow_comparator: Optional[int] = None
    flow_regret: Optional[int] = None
    flags: Dict[str, Any] = field(default_factory=dict)
    certificate: Dict[str, Any] = field(default_factory=dict)
    guarantee: str = "n/a"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "learner": self.learner,
            "adversary": self.adversary,
            "family": self.family,
            "seeds": {"learner": self.learner_seed, "adversary": self.adversary_seed},
            "x0": self.x0,
            "rounds": [
                {"t": t, "prediction": p, "truth": x, "mistake": m}
                for t, (p, x, m) in enumerate(zip(self.predictions, self.truths, self.mistake_flags), start=1)
            ],
            "mistakes": self.mistakes,
            "markovian_comparator": self.markovian_comparator,
            "markovian_regret": self.markovian_regret,
            "flow_comparator": self.flow_comparator,
            "flow_regret": self.flow_regret,
            "flags": self.flags,
            "certificate": self.certificate,
            "guarantee": self.guarantee,
        }

    def csv_rows(self) -> List[Tuple[int, str, str, int]]:
        return [(t, p, x, m) for t, (p, x, m) in enumerate(zip(self.predictions, self.truths, self.mistake_flags), start=1)]


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    return str(v)


def run_game(
    learner: Learner,
    adversary: Any,
    learner_seed: int = 0,
    adversary_seed: int = 0,
) -> GameReport:
    """Play one game. ``adversary`` may be an Adversary or a fixed Stream."""
    if isinstance(adversary, Stream):
        adversary = FixedStream(learner.family, adversary)
    family = adversary.family
    if family is not learner.family:
        raise SpecError("learner and adversary must share the same family object")
    T = adversary.T
    stream, preds, flags = play(learner, adversary.start(adversary_seed), T, learner_seed)
    flags_out = dict(flags)
    if adversary.adaptive and not learner.deterministic:
        guarantee = "unverified: adaptive adversary against a randomized learner"
    elif adversary.adaptive:
        guarantee = "deterministic learner"
    else:
        guarantee = "oblivious adversary"
    truths = list(stream.states)
    flags_m = [int(p != x) for p, x in zip(preds, truths)]
    mistakes = sum(flags_m)
    comps = _comparators(family, stream)
    fmt = family.format_state
    rep = GameReport(
        learner=learner.spec(),
        adversary=adversary.spec(),
        family=family.spec(),
        learner_seed=learner_seed,
        adversary_seed=adversary_seed,
        x0=fmt(stream.x0),
        predictions=[fmt(p) for p in preds],
        truths=[fmt(x) for x in truths],
        mistake_flags=flags_m,
        mistakes=mistakes,
        flags=_jsonable(flags_out),
        certificate=_jsonable(adversary.certificate(stream, adversary_seed)),
        guarantee=guarantee,
    )
    if comps["markovian"] is not None:
        rep.markovian_comparator = int(comps["markovian"][0])
        rep.markovian_regret = mistakes - rep.markovian_comparator
    if comps["flow"] is not None:
        rep.flow_comparator = int(comps["flow"][0])
        rep.flow_regret = mistakes - rep.flow_comparator
    return rep


@dataclass
class MonteCarloSummary:
    learner: Dict[str, Any]
    adversary: Dict[str, Any]
    family: Dict[str, Any]
    metric: str
    T: int
    trials: int
    base_seed: int
    values: List[int]
    delta: float = DEFAULT_DELTA
    certificate_failures: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if self.trials > 1 else 0.0

    @property
    def ci(self) -> float:
        return hoeffding_radius(self.T, self.trials, self.delta)

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.trials)

    def to_dict(self, include_trials: bool = False) -> Dict[str, Any]:
        out = {
            "learner": self.learner,
            "adversary": self.adversary,
            "family": self.family,
            "metric": self.metric,
            "T": self.T,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "seed_derivation": "numpy SeedSequence(entropy=base_seed, spawn_key=(replica, role)); role 0 learner, 1 adversary",
            "mean": self.mean,
            "std": self.std,
            "stderr": self.stderr,
            "delta": self.delta,
            "hoeffding_ci": self.ci,
            "certificate_failures": self.certificate_failures,
        }
        if include_trials:
            out["values"] = list(self.values)
            out["seeds"] = [
                {"learner": derive_seed(self.base_seed, i, 0), "adversary": derive_seed(self.base_seed, i, 1)}
                for i in range(self.trials)
            ]
        return out


def _metric_value(metric: str, family: Any, stream: Stream, preds: Sequence[Any]) -> int:
    mistakes = sum(int(p != x) for p, x in zip(preds, stream.states))
    if metric == "mistakes":
        return mistakes
    if metric == "markovian":
        if "markovian_comparator" not in family.capabilities:
            raise CapabilityError(f"{family.name} has no Markovian comparator")
        return mistakes - int(family.markovian_comparator(stream)[0])
    if "flow_comparator" not in family.capabilities:
        raise CapabilityError(f"{family.name} has no flow comparator")
    return mistakes - int(family.flow_comparator(stream)[0])


def _cert_ok(cert: Dict[str, Any]) -> bool:
    for key in ("ok", "realizable"):
        if key in cert and not cert[key]:
            return False
    return True


def _run_range(args: Tuple[Learner, Any, str, int, int, int, bool]) -> List[Tuple[int, int, bool]]:
    learner, adversary, metric, seed, lo, hi, check = args
    out = []
    for i in range(lo, hi):
        ls, as_ = derive_seed(seed, i, 0), derive_seed(seed, i, 1)
        stream, preds, _ = play(learner, adversary.start(as_), adversary.T, ls)
        ok = _cert_ok(adversary.certificate(stream, as_)) if check else True
        out.append((i, _metric_value(metric, adversary.family, stream, preds), ok))
    return out


def monte_carlo(
    learner: Learner,
    adversary: Any,
    trials: int,
    seed: int = 0,
    metric: str = "mistakes",
    workers: Optional[int] = None,
    delta: float = DEFAULT_DELTA,
    check_certificates: bool = True,
) -> MonteCarloSummary:
    """Replica i uses learner seed derive_seed(seed, i, 0) and adversary seed derive_seed(seed, i, 1)."""
    if metric not in METRICS:
        raise SpecError(f"metric must be one of {METRICS}")
    if trials < 1:
        raise SpecError("trials must be >= 1")
    if isinstance(adversary, Stream):
        adversary = FixedStream(learner.family, adversary)
    if adversary.family is not learner.family:
        raise SpecError("learner and adversary must share the same family object")
    if workers and workers > 1 and trials > 1:
        step = -(-trials // workers)
        chunks = [(learner, adversary, metric, seed, lo, min(lo + step, trials), check_certificates) for lo in range(0, trials, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_run_range, chunks) for r in part]
    else:
        results = _run_range((learner, adversary, metric, seed, 0, trials, check_certificates))
    results.sort(key=lambda r: r[0])
    fam = adversary.family
    return MonteCarloSummary(
        learner=learner.spec(),
        adversary=adversary.spec(),
        family=fam.spec(),
        metric=metric,
        T=adversary.T,
        trials=trials,
        base_seed=seed,
        values=[v for _, v, _ in results],
        delta=delta,
        certificate_failures=sum(1 for *_, ok in results if not ok),
    )


@dataclass
class SuiteResult:
    worst: int
    worst_member: int
    worst_x0: int
    runs: int
    potential_violations: int
    fallbacks: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def exhaustive_realizable_suite(family: Any, learner: Learner, T: int, budget: Optional[int] = None) -> SuiteResult:
    """Worst-case mistakes over every (member, x0) flow of length T."""
    require_enumerated(family, "exhaustive_realizable_suite")
    budget = default_budget() if budget is None else budget
    need = family.member_count * family.size * max(T, 1)
    if need > budget:
        raise BudgetError(f"suite needs {need} rounds, budget is {budget}", need, budget)
    worst, wf, wx = -1, 0, 0
    viol = fallbacks = 0
    for f in range(family.member_count):
        for x0 in range(family.size):
            sess = learner.start(x0, T, 0)
            m = 0
            for x in family.flow(f, x0, T):
                m += int(sess.predict() != x)
                sess.observe(x)
            viol += sess.flags.get("potential_violations", 0)
            fallbacks += int(bool(sess.flags.get("fallback")))
            if m > worst:
                worst, wf, wx = m, f, x0
    return SuiteResult(worst, wf, wx, family.member_count * family.size, viol, fallbacks)
