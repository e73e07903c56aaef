"""Online learners behind one session contract.

A ``Learner`` is a factory bound to a family; ``start(x0, T, seed)`` returns a
``Session`` that alternates ``predict()`` and ``observe(x)`` for T rounds.
Enumerated families exchange state indices, implicit families exchange labels.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from evolab.catalog import LowRankLinear, Separation
from evolab.core import BudgetError, CapabilityError, EvolutionFamily, SpecError, default_budget, require_enumerated
from evolab.dimensions import complexity_table, evolution_complexity, littlestone_table
from evolab.exact import SpanMap


class Session:
    """One run of a learner. Subclasses implement ``_predict`` and ``_observe``."""

    def __init__(self, x0: Any, T: int):
        self.prev = x0
        self.T = T
        self.t = 0  # completed rounds
        self.flags: Dict[str, Any] = {}
        self._pending: Optional[Any] = None

    def predict(self) -> Any:
        if self._pending is not None:
            raise SpecError("predict() called twice without observe()")
        self._pending = (self._predict(),)
        return self._pending[0]

    def observe(self, x: Any) -> None:
        if self._pending is None:
            raise SpecError("observe() called before predict()")
        pred = self._pending[0]
        self._pending = None
        self.t += 1
        self._observe(x, pred)
        self.prev = x

    def _predict(self) -> Any:
        raise NotImplementedError

    def _observe(self, x: Any, pred: Any) -> None:
        pass


class Learner:
    id = "learner"
    deterministic = True
    needs_enumerated = True

    def __init__(self, family: Any, **params: Any):
        if self.needs_enumerated:
            require_enumerated(family, self.id)
        self.family = family
        self.params = params

    def start(self, x0: Any, T: int, seed: int = 0) -> Session:
        raise NotImplementedError

    def spec(self) -> Dict[str, Any]:
        return {"learner": self.id, "params": dict(self.params)}


# ---------------------------------------------------------------------------
# realizable learners on enumerated families
# ---------------------------------------------------------------------------


class _VersionSession(Session):
    """Keeps V_t; on an inconsistent observation freezes V and repeats the last state."""

    def __init__(self, family: EvolutionFamily, x0: int, T: int):
        super().__init__(family.space.check(x0), T)
        self.family = family
        self.mask = family.full_mask
        self.frozen = False
        self.flags["fallback"] = False

    def candidates(self) -> List[Tuple[int, int]]:
        row = self.family.masks[self.prev]
        out = []
        for y in self.family.full_projection[self.prev]:
            sub = self.mask & row[y]
            if sub:
                out.append((y, sub))
        return out

    def _predict(self) -> int:
        if self.frozen:
            return self.prev
        return self.choose(self.candidates())

    def choose(self, cands: List[Tuple[int, int]]) -> int:
        raise NotImplementedError

    def _observe(self, x: int, pred: int) -> None:
        self.family.space.check(x)
        if self.frozen:
            return
        sub = self.mask & self.family.masks[self.prev][x]
        if sub:
            self.mask = sub
        else:
            self.frozen = True
            self.flags["fallback"] = True
            self.flags["fallback_round"] = self.t


class Alg1Session(_VersionSession):
    def __init__(self, learner: "Alg1", x0: int, T: int):
        super().__init__(learner.family, x0, T)
        self.table = complexity_table(learner.family)
        self.domain = learner.argmax_domain
        self.highest = learner.tie_break == "highest"
        self.instrument = learner.instrument
        if self.instrument:
            self.flags["potential"] = [self.table.value(self.mask, self.prev, T)]
            self.flags["potential_violations"] = 0

    def choose(self, cands: List[Tuple[int, int]]) -> int:
        d = max(self.T - self.t - 1, 0)
        if self.domain == "all":
            row = self.family.masks[self.prev]
            scored = []
            for y in range(self.family.size):
                sub = self.mask & row[y]
                scored.append((self.table.value(sub, y, d) if sub else float("-inf"), y))
        else:
            if len(cands) == 1:
                return cands[0][0]
            scored = [(self.table.value(sub, y, d), y) for y, sub in cands]
        best = max(s for s, _ in scored)
        ys = [y for s, y in scored if s == best]
        return ys[-1] if self.highest else ys[0]

    def _observe(self, x: int, pred: int) -> None:
        super()._observe(x, pred)
        if self.instrument and not self.frozen:
            before = self.flags["potential"][-1]
            after = self.table.value(self.mask, x, max(self.T - self.t, 0))
            self.flags["potential"].append(after)
            if after > before - int(x != pred):
                self.flags["potential_violations"] += 1


class Alg1(Learner):
    """Predict the successor whose restricted version space keeps the most evolution complexity."""

    id = "alg1"

    def __init__(self, family: EvolutionFamily, argmax_domain: str = "projection", tie_break: str = "lowest", instrument: bool = False):
        super().__init__(family, argmax_domain=argmax_domain, tie_break=tie_break, instrument=instrument)
        if argmax_domain not in ("projection", "all"):
            raise SpecError("argmax_domain must be 'projection' or 'all'")
        if tie_break not in ("lowest", "highest"):
            raise SpecError("tie_break must be 'lowest' or 'highest'")
        self.argmax_domain = argmax_domain
        self.tie_break = tie_break
        self.instrument = bool(instrument)

    def start(self, x0: int, T: int, seed: int = 0) -> Alg1Session:
        return Alg1Session(self, x0, T)


class MulticlassSession:
    """Realizable multiclass learner over the labeled pairs (x_{t-1}, x_t)."""

    def __init__(self, family: EvolutionFamily, score: Callable[[int], int]):
        self.family = family
        self.mask = family.full_mask
        self.score = score

    def predict(self, x: int) -> Optional[int]:
        row = self.family.masks[x]
        best, best_y = -1, None
        for y in self.family.full_projection[x]:
            sub = self.mask & row[y]
            if sub:
                s = self.score(sub)
                if s > best:
                    best, best_y = s, y
        return best_y

    def update(self, x: int, y: int) -> bool:
        sub = self.mask & self.family.masks[x][y]
        if sub:
            self.mask = sub
        return bool(sub)


class ReductionSession(Session):
    """Pass x_{t-1} to the multiclass learner and play its label."""

    def __init__(self, family: EvolutionFamily, inner: MulticlassSession, x0: int, T: int):
        super().__init__(family.space.check(x0), T)
        self.family = family
        self.inner = inner
        self.frozen = False
        self.flags["fallback"] = False

    def _predict(self) -> int:
        if self.frozen:
            return self.prev
        y = self.inner.predict(self.prev)
        return self.prev if y is None else y

    def _observe(self, x: int, pred: int) -> None:
        self.family.space.check(x)
        if not self.frozen and not self.inner.update(self.prev, x):
            self.frozen = True
            self.flags["fallback"] = True
            self.flags["fallback_round"] = self.t


class SOA(Learner):
    id = "soa"

    def start(self, x0: int, T: int, seed: int = 0) -> ReductionSession:
        tab = littlestone_table(self.family)
        return ReductionSession(self.family, MulticlassSession(self.family, tab.value), x0, T)


class Halving(Learner):
    id = "halving"

    def start(self, x0: int, T: int, seed: int = 0) -> ReductionSession:
        return ReductionSession(self.family, MulticlassSession(self.family, int.bit_count), x0, T)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


class _FnSession(Session):
    def __init__(self, x0: Any, T: int, rule: Callable[["_FnSession"], Any]):
        super().__init__(x0, T)
        self.rule = rule

    def _predict(self) -> Any:
        return self.rule(self)


class Persistence(Learner):
    """Predict that the state does not change."""

    id = "persistence"
    needs_enumerated = False

    def start(self, x0: Any, T: int, seed: int = 0) -> Session:
        return _FnSession(x0, T, lambda s: s.prev)


class Constant(Learner):
    """Always predict one fixed state (x0 unless ``state`` is given)."""

    id = "constant"
    needs_enumerated = False

    def __init__(self, family: Any, state: Optional[Any] = None):
        super().__init__(family, state=state)
        if state is not None and getattr(family, "enumerated", False):
            family.space.check(state)
        self.state = state

    def start(self, x0: Any, T: int, seed: int = 0) -> Session:
        c = x0 if self.state is None else self.state
        return _FnSession(x0, T, lambda s: c)


class FixedMember(Learner):
    """Play a single member's one-step prediction f(x_{t-1})."""

    id = "fixed_member"

    def __init__(self, family: EvolutionFamily, member: int = 0):
        super().__init__(family, member=member)
        family._check_member(member)
        self.member = member

    def start(self, x0: int, T: int, seed: int = 0) -> Session:
        row = self.family.table[self.member]
        return _FnSession(x0, T, lambda s: int(row[s.prev]))


class UniformRandom(Learner):
    id = "uniform_random"
    deterministic = False

    def start(self, x0: int, T: int, seed: int = 0) -> Session:
        rng = np.random.default_rng(seed)
        n = self.family.size
        return _FnSession(x0, T, lambda s: int(rng.integers(n)))


class RandomMember(Learner):
    """Sample one member at the start and follow its one-step predictions."""

    id = "random_member"
    deterministic = False
    needs_enumerated = False

    def start(self, x0: Any, T: int, seed: int = 0) -> Session:
        rng = np.random.default_rng(seed)
        fam = self.family
        if fam.enumerated:
            row = fam.table[int(rng.integers(fam.member_count))]
            return _FnSession(x0, T, lambda s: int(row[s.prev]))
        member = fam.sample_member(rng)
        return _FnSession(x0, T, lambda s: fam.apply(member, s.prev))


# ---------------------------------------------------------------------------
# exponential weights
# ---------------------------------------------------------------------------


class _Weights:
    """Exponential weights kept as multiplicative factors, rescaled before underflow."""

    def __init__(self, n: int, eta: float, rng: np.random.Generator):
        self.w = np.ones(n)
        self.decay = math.exp(-eta)
        self.rng = rng

    def sample(self) -> int:
        c = np.cumsum(self.w)
        return min(int(np.searchsorted(c, self.rng.random() * c[-1], side="right")), len(c) - 1)

    def penalize(self, lost: np.ndarray) -> None:
        self.w[lost] *= self.decay
        top = self.w.max()
        if top < 1e-100:
            self.w /= top


class EWMarkovianSession(Session):
    def __init__(self, family: EvolutionFamily, x0: int, T: int, seed: int, eta: float):
        super().__init__(family.space.check(x0), T)
        self.table = family.table
        self.eta = eta
        self.weights = _Weights(family.member_count, eta, np.random.default_rng(seed))

    def _predict(self) -> int:
        return int(self.table[self.weights.sample(), self.prev])

    def _observe(self, x: int, pred: int) -> None:
        self.weights.penalize(self.table[:, self.prev] != x)


class EWMarkovian(Learner):
    """Randomized exponential weights over members, loss 1{f(x_{t-1}) != x_t}."""

    id = "ew_markovian"
    deterministic = False

    def start(self, x0: int, T: int, seed: int = 0) -> EWMarkovianSession:
        n = self.family.member_count
        eta = math.sqrt(2 * math.log(n) / T) if n > 1 and T > 0 else 0.0
        return EWMarkovianSession(self.family, x0, T, seed, eta)


def expert_count(C: int, K: int, T: int) -> int:
    """sum_{i <= C} K^i binom(T, i)."""
    return sum(K**i * math.comb(T, i) for i in range(min(C, T) + 1))


def expert_predictions(family: EvolutionFamily, x0: int, T: int, budget: Optional[int] = None) -> np.ndarray:
    """Prediction matrix (|E|, T) of every expert E_{L, phi}.

    An expert replays Algorithm 1 on its own predicted trajectory, except at
    rounds in L where it plays the phi(t)-th smallest element of F(prev)
    (clamped to the last element when phi(t) exceeds |F(prev)|).
    Rows are ordered by depth-first search over rounds, "follow Algorithm 1"
    before the phi branches in increasing order.
    """
    require_enumerated(family, "flow experts")
    key = ("experts", x0, T)
    if key in family.cache:
        return family.cache[key]
    C = evolution_complexity(family, T)[0]
    K = family.max_projection
    need = expert_count(C, K, T)
    budget = default_budget() if budget is None else budget
    if need > budget:
        raise BudgetError(f"flow experts need {need} experts, budget is {budget}", need, budget)
    table = complexity_table(family)
    masks, proj = family.masks, family.full_projection
    rows: List[List[int]] = []

    def alg1_move(mask: int, prev: int, t: int) -> int:
        if mask is None:
            return prev
        cands = [(y, mask & masks[prev][y]) for y in proj[prev]]
        cands = [(y, s) for y, s in cands if s]
        if len(cands) == 1:
            return cands[0][0]
        d = T - t
        best = max(table.value(s, y, d) for y, s in cands)
        return next(y for y, s in cands if table.value(s, y, d) == best)

    def dfs(t: int, mask: Optional[int], prev: int, left: int, path: List[int]) -> None:
        if t > T:
            rows.append(list(path))
            return
        moves = [alg1_move(mask, prev, t)]
        if left:
            p = proj[prev]
            moves += [p[min(i, len(p) - 1)] for i in range(K)]
        for j, y in enumerate(moves):
            if mask is None:
                nmask = None
            else:
                sub = mask & masks[prev][y]
                nmask = sub if sub else None  # frozen fallback
            path.append(y)
            dfs(t + 1, nmask, y, left - (j > 0), path)
            path.pop()

    dfs(1, family.full_mask, family.space.check(x0), C, [])
    out = np.asarray(rows, dtype=np.int64).reshape(len(rows), T)
    assert out.shape[0] == need
    out.setflags(write=False)
    family.cache[key] = out
    return out


class FlowExpertsSession(Session):
    def __init__(self, preds: np.ndarray, x0: int, T: int, seed: int):
        super().__init__(x0, T)
        self.preds = preds
        n = preds.shape[0]
        self.eta = math.sqrt(2 * math.log(n) / T) if n > 1 and T > 0 else 0.0
        self.weights = _Weights(n, self.eta, np.random.default_rng(seed))

    def _predict(self) -> int:
        return int(self.preds[self.weights.sample(), self.t])

    def _observe(self, x: int, pred: int) -> None:
        self.weights.penalize(self.preds[:, self.t - 1] != x)


class FlowExperts(Learner):
    id = "flow_experts"
    deterministic = False

    def __init__(self, family: EvolutionFamily, budget: Optional[int] = None):
        super().__init__(family, budget=budget)
        self.budget = budget

    def start(self, x0: int, T: int, seed: int = 0) -> FlowExpertsSession:
        return FlowExpertsSession(expert_predictions(self.family, x0, T, self.budget), x0, T, seed)


# ---------------------------------------------------------------------------
# implicit-family learners
# ---------------------------------------------------------------------------


class LinearSpanSession(Session):
    def __init__(self, family: LowRankLinear, x0: Sequence[int], T: int):
        super().__init__(tuple(x0), T)
        self.family = family
        self.span = SpanMap(family.n)

    def _predict(self) -> Tuple[int, ...]:
        y = self.span.predict(self.prev)
        return self.family.zero() if y is None else y

    def _observe(self, x: Sequence[int], pred: Any) -> None:
        self.span.add(self.prev, x)


class LinearSpan(Learner):
    """Predict the forced image when x_{t-1} is in the span of earlier inputs, else zero."""

    id = "linear_span"
    needs_enumerated = False

    def __init__(self, family: Any):
        if not isinstance(family, LowRankLinear):
            raise CapabilityError("linear_span runs on lowrank_linear families")
        super().__init__(family)

    def start(self, x0: Any, T: int, seed: int = 0) -> LinearSpanSession:
        return LinearSpanSession(self.family, x0, T)


class SeparationSession(Session):
    def __init__(self, family: Separation, x0: Any, T: int):
        super().__init__(family.check_state(x0), T)
        self.family = family
        self.sigma: Optional[str] = None

    def _predict(self) -> Any:
        fam = self.family
        theta, z = self.prev
        if abs(z) >= fam.zmax:
            return self.prev
        if self.sigma is not None:
            return fam.apply(self.sigma, self.prev)
        return (fam.ones, abs(z) + 1)

    def _observe(self, x: Any, pred: Any) -> None:
        theta, z = x
        if self.sigma is None and z and abs(z) % 3 == 0 and abs(z) > abs(self.prev[1]):
            self.sigma = theta
            self.flags["revealed_round"] = self.t


class SeparationRealizable(Learner):
    """Guess all-plus successors until a multiple-of-3 round reveals sigma."""

    id = "separation_realizable"
    needs_enumerated = False

    def __init__(self, family: Any):
        if not isinstance(family, Separation):
            raise CapabilityError("separation_realizable runs on separation families")
        super().__init__(family)

    def start(self, x0: Any, T: int, seed: int = 0) -> SeparationSession:
        return SeparationSession(self.family, x0, T)


class SignedCappedLearner(Learner):
    """Random signs while the flow can still branch, then the forced positive successor."""

    id = "signed_capped"
    deterministic = False

    def __init__(self, family: EvolutionFamily, p: Optional[int] = None):
        super().__init__(family, p=p)
        if family.space.kind != "int" or "w" not in family.params:
            raise CapabilityError("signed_capped learner needs a signed integer family")
        self.p = family.params.get("p") if p is None else p
        if self.p is None:
            raise SpecError("signed_capped learner needs p")
        self.w = family.params["w"]

    def start(self, x0: int, T: int, seed: int = 0) -> Session:
        rng = np.random.default_rng(seed)
        space = self.family.space
        lab0 = space.decode(x0)
        k0 = abs(lab0)
        p, w = self.p, self.w
        plan = []
        sign = 1
        for t in range(1, T + 1):
            if k0 >= w:
                plan.append(x0)
                continue
            k = k0 + t
            if t <= p - k0:
                sign = 1 if rng.random() < 0.5 else -1
            elif k <= w:
                sign = 1
            plan.append(space.encode(sign * min(k, w)))
        return _FnSession(x0, T, lambda s: plan[s.t])


REGISTRY: Dict[str, type] = {
    cls.id: cls
    for cls in (
        Alg1,
        SOA,
        Halving,
        Persistence,
        Constant,
        FixedMember,
        UniformRandom,
        RandomMember,
        EWMarkovian,
        FlowExperts,
        LinearSpan,
        SeparationRealizable,
        SignedCappedLearner,
    )
}


def build_learner(name: str, family: Any, params: Optional[Dict[str, Any]] = None) -> Learner:
    if name not in REGISTRY:
        raise SpecError(f"unknown learner {name!r}; known: {', '.join(sorted(REGISTRY))}")
    try:
        return REGISTRY[name](family, **(params or {}))
    except TypeError as exc:
        raise SpecError(f"bad parameters for learner {name}: {exc}") from exc


def compatible_learners(family: Any) -> List[str]:
    """Learner ids that can be constructed on this family."""
    out = []
    for name, cls in REGISTRY.items():
        try:
            cls(family)
        except (CapabilityError, SpecError):
            continue
        out.append(name)
    return out
