"""Stream generators and adaptive opponents for the lower-bound constructions.

An ``Adversary`` is bound to a family and a horizon. ``start(seed)`` returns a
session exposing ``x0`` and ``next(prediction)``. Oblivious adversaries also
provide ``sample(seed) -> Stream``; their sessions ignore predictions.
After a run, ``certificate(stream)`` checks the construction's contract.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from evolab.catalog import LowRankLinear, Separation, markovian_tightness, switching
from evolab.core import CapabilityError, EvolutionFamily, SpecError, Stream, require_enumerated
from evolab.dimensions import LittlestoneTree, evolution_complexity, littlestone_dimension, littlestone_path_member
from evolab.exact import matvec, rank
from evolab.trees import TrajectoryTree, branching_factor, is_shattered, path_witness_mask


class AdversarySession:
    def __init__(self, x0: Any, T: int):
        self.x0 = x0
        self.T = T
        self.t = 0
        self.states: List[Any] = []

    def next(self, prediction: Any) -> Any:
        if self.t >= self.T:
            raise SpecError("adversary horizon exhausted")
        x = self._next(prediction)
        self.t += 1
        self.states.append(x)
        return x

    def _next(self, prediction: Any) -> Any:
        raise NotImplementedError

    def stream(self) -> Stream:
        return Stream(self.x0, self.states)


class _Replay(AdversarySession):
    def __init__(self, stream: Stream):
        super().__init__(stream.x0, stream.T)
        self._src = stream.states

    def _next(self, prediction: Any) -> Any:
        return self._src[self.t]


class Adversary:
    id = "adversary"
    adaptive = False
    realizable = False

    def __init__(self, family: Any, T: int):
        if T < 0:
            raise SpecError("horizon must be nonnegative")
        self.family = family
        self.T = int(T)
        self.params: Dict[str, Any] = {}

    def start(self, seed: int = 0) -> AdversarySession:
        return _Replay(self.sample(seed))

    def sample(self, seed: int) -> Stream:
        raise CapabilityError(f"{self.id} is adaptive and cannot pre-sample streams")

    def certificate(self, stream: Stream, seed: Optional[int] = None) -> Dict[str, Any]:
        return {}

    def spec(self) -> Dict[str, Any]:
        return {"adversary": self.id, "params": dict(self.params), "T": self.T}


class FixedStream(Adversary):
    """Replays a given stream."""

    id = "stream"

    def __init__(self, family: Any, stream: Stream):
        super().__init__(family, stream.T)
        self.stream = stream

    def sample(self, seed: int) -> Stream:
        return self.stream


def _realizable_certificate(family: EvolutionFamily, stream: Stream) -> Dict[str, Any]:
    ok, vs = family.is_realizable(stream)
    members = vs.members()
    return {"realizable": ok, "witness_member": members[0] if members else None}


# ---------------------------------------------------------------------------
# trajectory-tree adversaries
# ---------------------------------------------------------------------------


class _TreeWalk(AdversarySession):
    def __init__(self, adv: "TreeDeterministic", bits_fn):
        super().__init__(adv.tree.root, adv.T)
        self.adv = adv
        self.bits_fn = bits_fn
        self.p = 0
        self.bits: List[int] = []
        self.pad: List[int] = []

    def _next(self, prediction: Any) -> int:
        tree = self.adv.tree
        t = self.t + 1
        if t <= tree.depth:
            left, right = tree.levels[t][2 * self.p], tree.levels[t][2 * self.p + 1]
            b = self.bits_fn(t, left, right, prediction)
            self.bits.append(b)
            self.p = 2 * self.p + b
            return right if b else left
        if not self.pad:
            fam = self.adv.family
            mask = path_witness_mask(tree, fam, self.bits)
            member = (mask & -mask).bit_length() - 1
            last = tree.levels[tree.depth][self.p]
            self.pad = fam.flow(member, last, self.T - tree.depth)
        return self.pad[t - tree.depth - 1]


class TreeDeterministic(Adversary):
    """Walk a shattered tree, always taking the child the learner did not predict."""

    id = "tree_deterministic"
    adaptive = True
    realizable = True

    def __init__(self, family: EvolutionFamily, tree: Optional[TrajectoryTree] = None, T: Optional[int] = None):
        require_enumerated(family, self.id)
        if tree is None:
            if T is None:
                raise SpecError("tree adversary needs a tree or a horizon")
            tree = evolution_complexity(family, T)[1]
        ok, _ = is_shattered(tree, family)
        if not ok:
            raise SpecError("witness tree is not shattered by the family")
        super().__init__(family, tree.depth if T is None else T)
        self.tree = tree if self.T >= tree.depth else tree.truncate(self.T)
        self.B = branching_factor(self.tree)
        self.params = {"depth": self.tree.depth, "B": self.B}

    def start(self, seed: int = 0) -> AdversarySession:
        def pick(t: int, left: int, right: int, pred: Any) -> int:
            if left == right:
                return 0
            return 0 if pred != left else 1

        return _TreeWalk(self, pick)

    def certificate(self, stream: Stream, seed: Optional[int] = None) -> Dict[str, Any]:
        return _realizable_certificate(self.family, stream)


class TreeRandomPath(TreeDeterministic):
    """Emit the trajectory of a uniformly random root-to-leaf path."""

    id = "tree_random_path"
    adaptive = False

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, size=self.tree.depth).tolist()
        sess = _TreeWalk(self, lambda t, left, right, pred: bits[t - 1])
        for _ in range(self.T):
            sess.next(None)
        return sess.stream()

    def start(self, seed: int = 0) -> AdversarySession:
        return _Replay(self.sample(seed))


# ---------------------------------------------------------------------------
# low-rank linear and Boolean-network adversaries
# ---------------------------------------------------------------------------


class _LowRankForcingSession(AdversarySession):
    def __init__(self, adv: "LowRankForcing"):
        fam = adv.family
        super().__init__(fam.basis(0), adv.T)
        self.adv = adv
        self.sig: List[int] = [1]
        self.W: Optional[Tuple[Tuple[int, ...], ...]] = None

    def _next(self, prediction: Any) -> Tuple[int, ...]:
        fam, r = self.adv.family, self.adv.r
        t = self.t + 1
        if t <= r + 1:
            i = t if t <= r else 1
            plus = fam.basis(i, 1)
            s = -1 if tuple(prediction) == plus else 1
            self.sig.append(s)
            return fam.basis(i, s)
        if self.W is None:
            self.W = self.adv.w_star(self.sig)
        return matvec(self.W, self.states[-1])


class LowRankForcing(Adversary):
    """x_t = +-e_t avoiding the prediction for t <= r, wrap to +-e_1, then follow W*."""

    id = "lowrank_forcing"
    adaptive = True
    realizable = True

    def __init__(self, family: LowRankLinear, T: Optional[int] = None):
        if not isinstance(family, LowRankLinear):
            raise CapabilityError("lowrank_forcing adversary runs on lowrank_linear families")
        if family.r < 1:
            raise SpecError("lowrank_forcing adversary needs r >= 1")
        super().__init__(family, family.r + 1 if T is None else T)
        self.r = family.r
        self.params = {"n": family.n, "r": family.r}

    def w_star(self, sig: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
        n, r = self.family.n, self.r
        W = [[0] * n for _ in range(n)]
        for t in range(1, r + 1):
            W[t][t - 1] += sig[t - 1] * sig[t]
        W[1][r] += sig[r] * sig[r + 1]
        return tuple(tuple(row) for row in W)

    def start(self, seed: int = 0) -> _LowRankForcingSession:
        return _LowRankForcingSession(self)

    def certificate(self, stream: Stream, seed: Optional[int] = None) -> Dict[str, Any]:
        states = (stream.x0,) + stream.states
        r = self.r
        if stream.T < r + 1:
            return {"realizable": True, "note": "horizon shorter than r + 1"}
        sig = [1] + [int(sum(states[t])) for t in range(1, r + 2)]
        W = self.w_star(sig)
        return {
            "realizable": self.family.consistent(W, stream) and rank(W) <= r,
            "w_star": [list(row) for row in W],
            "rank": rank(W),
        }


class _BooleanForcingSession(AdversarySession):
    def __init__(self, adv: "BooleanForcing"):
        self.adv = adv
        fam, n = adv.family, adv.n
        self.sp = fam.space
        x0 = self.sp.encode(tuple([1] * n)) if adv.variant == "threshold" else self.sp.encode(self._e(0))
        super().__init__(x0, adv.T)
        self.used = [0] if adv.variant == "mod2" else []
        self.pad: List[int] = []

    def _e(self, i: int) -> Tuple[int, ...]:
        return tuple(1 if j == i else 0 for j in range(self.adv.n))

    def _next(self, prediction: Any) -> int:
        n, t, sp = self.adv.n, self.t + 1, self.sp
        prev = self.states[-1] if self.states else self.x0
        if t > n:
            if not self.pad:
                ok, vs = self.adv.family.is_realizable(self.stream())
                member = vs.members()[0]
                self.pad = self.adv.family.flow(member, prev, self.T - n)
            return self.pad[t - n - 1]
        if self.adv.variant == "mod2":
            if t <= n - 2:
                for i in range(n):
                    x = sp.encode(self._e(i))
                    if i not in self.used and x != prediction:
                        self.used.append(i)
                        return x
            if t == n - 1:
                i = next(j for j in range(n) if j not in self.used)
                e = self._e(i)
                e_plus = tuple(a ^ b for a, b in zip(e, self._e(0)))
                cands = [sp.encode(e), sp.encode(e_plus)]
                return next(x for x in cands if x != prediction)
            return next(x for x in range(sp.size) if x != prediction)
        # threshold variant: remove one new coordinate per round
        cur = sp.decode(prev)
        if t <= n - 1:
            for i in range(n):
                if cur[i] == 1:
                    x = sp.encode(tuple(0 if j == i else v for j, v in enumerate(cur)))
                    if x != prediction:
                        return x
        return next(x for x in (prev, sp.encode(tuple([0] * n))) if x != prediction)


class BooleanForcing(Adversary):
    """Basis stream (mod2) or subtraction stream (threshold) forcing n mistakes."""

    id = "boolean_forcing"
    adaptive = True
    realizable = True

    def __init__(self, family: EvolutionFamily, variant: Optional[str] = None, T: Optional[int] = None):
        require_enumerated(family, self.id)
        variant = variant or {"bool_mod2": "mod2", "bool_threshold": "threshold"}.get(family.name)
        if variant not in ("mod2", "threshold") or family.space.kind != "bits":
            raise SpecError("boolean_forcing adversary needs a Boolean family and variant mod2 or threshold")
        n = len(family.space.labels[0])
        if n < 2:
            raise SpecError("boolean_forcing adversary needs n >= 2")
        super().__init__(family, n if T is None else T)
        self.n = n
        self.variant = variant
        self.params = {"n": n, "variant": variant}

    def start(self, seed: int = 0) -> _BooleanForcingSession:
        return _BooleanForcingSession(self)

    def certificate(self, stream: Stream, seed: Optional[int] = None) -> Dict[str, Any]:
        return _realizable_certificate(self.family, stream)


# ---------------------------------------------------------------------------
# randomized Markovian lower bounds
# ---------------------------------------------------------------------------


class LittlestoneBlock(Adversary):
    """Random path down a Littlestone tree, sampled at depths n_1 = 1, n_{i+1} in {3i-1, 3i, 3i+1}."""

    id = "littlestone_block"

    def __init__(self, family: EvolutionFamily, tree: Optional[LittlestoneTree] = None):
        require_enumerated(family, self.id)
        if tree is None:
            tree = littlestone_dimension(family)[1]
        d = tree.depth
        if d < 1:
            raise SpecError("littlestone_block needs a tree of depth >= 1")
        for leaf in range(2**d):
            bits = [(leaf >> (d - 1 - i)) & 1 for i in range(d)]
            nodes, _ = tree.path(bits)
            if len(set(nodes)) != len(nodes):
                raise SpecError("node labels repeat along a path; the block construction does not apply")
        self.tree = tree
        self.d = d
        self.r = (d + 2) // 3
        super().__init__(family, 2 * self.r - 1)
        self.params = {"d": d, "r": self.r}

    def draw(self, seed: int) -> Tuple[List[int], List[int]]:
        rng = np.random.default_rng(seed)
        ns = [1] + [3 * i - 1 + int(rng.integers(0, 3)) for i in range(1, self.r)]
        bits = rng.integers(0, 2, size=self.d).tolist()
        return ns, bits

    def sample(self, seed: int) -> Stream:
        ns, bits = self.draw(seed)
        nodes, edges = self.tree.path(bits)
        out: List[int] = []
        for i, n in enumerate(ns):
            if i:
                out.append(nodes[n - 1])
            out.append(edges[n - 1])
        return Stream(nodes[0], out)

    def certificate(self, stream: Stream, seed: Optional[int] = None) -> Dict[str, Any]:
        if seed is None:
            return {}
        _, bits = self.draw(seed)
        f = littlestone_path_member(self.family, self.tree, bits)
        loss = int(self.family.markovian_losses(stream)[f])
        return {"path_member": f, "path_member_loss": loss, "bound": self.r - 1, "ok": loss <= self.r - 1}


class TwoFunction(Adversary):
    """Mix Uniform{x_bar, f_sigma(x_prev)} draws between two members that differ at x_bar."""

    id = "two_function"

    def __init__(self, family: EvolutionFamily, T: int, f1: int = 0, f2: int = 1):
        require_enumerated(family, self.id)
        super().__init__(family, T)
        a, b = family.table[f1], family.table[f2]
        diff = np.flatnonzero(a != b)
        if diff.size == 0:
            raise SpecError("two_function needs members that differ somewhere")
        self.f = (f1, f2)
        self.xbar = int(diff[0])
        self.S = [int(x) for x in np.flatnonzero(a == b)]
        self.S0 = [x for x in self.S if int(a[x]) == self.xbar]
        self.params = {"f1": f1, "f2": f2, "xbar": self.xbar}

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        table = self.family.table
        S, S0 = set(self.S), set(self.S0)
        x = self.xbar
        out = []
        for _ in range(self.T):
            sigma = int(rng.integers(0, 2))
            coin = int(rng.integers(0, 2))
            fx = int(table[self.f[sigma], x])
            if x in S0:
                x = self.xbar
            elif x in S:
                x = self.xbar if coin else fx
            else:
                x = fx
            out.append(x)
        return Stream(self.xbar, out)


class MarkovianTightness(Adversary):
    """Blocks of 2k rounds around x = i, each emitting +-(d + i) at random after i."""

    id = "markovian_tightness"

    def __init__(self, family: Optional[EvolutionFamily] = None, d: int = 3, k: int = 1, T: Optional[int] = None):
        if k < 1 or k % 2 == 0:
            raise SpecError("k must be a positive odd integer")
        expected = 2 * k * d - 1
        if T is not None and T != expected:
            raise SpecError(f"horizon must be 2kd - 1 = {expected}")
        family = markovian_tightness(d) if family is None else family
        super().__init__(family, expected)
        self.d, self.k = d, k
        self.params = {"d": d, "k": k}

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        eps = rng.integers(0, 2, size=self.T) * 2 - 1
        d, k, sp = self.d, self.k, self.family.space
        out = []
        prev = 1
        for t in range(1, self.T + 1):
            i = (t - 1) // (2 * k) + 1
            if t % (2 * k) == 0:
                x = i + 1
            else:
                x = int(eps[t - 1]) * (d + i) if prev == i else i
            out.append(x)
            prev = x
        return Stream(sp.encode(1), [sp.encode(x) for x in out])


# ---------------------------------------------------------------------------
# flow lower bounds
# ---------------------------------------------------------------------------


class SignStream(Adversary):
    """x_0 = 0 and x_t = eps_t t with uniform signs, on a signed integer family."""

    id = "sign_stream"

    def __init__(self, family: EvolutionFamily, T: int):
        require_enumerated(family, self.id)
        if family.space.kind != "int" or family.params.get("w", 0) < T:
            raise SpecError("sign_stream needs a signed integer family with window w >= T")
        super().__init__(family, T)

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        eps = rng.integers(0, 2, size=self.T) * 2 - 1
        sp = self.family.space
        return Stream(sp.encode(0), [sp.encode(int(e) * t) for t, e in enumerate(eps, start=1)])


class SwitchingTightness(SignStream):
    """Sign stream of length k(p + 1) on the switching family."""

    id = "switching_tightness"

    def __init__(self, family: Optional[EvolutionFamily] = None, p: int = 1, k: int = 1):
        if k < 1 or k % 2 == 0:
            raise SpecError("k must be a positive odd integer")
        T = k * (p + 1)
        family = switching(p, T) if family is None else family
        super().__init__(family, T)
        self.p, self.k = p, k
        self.params = {"p": p, "k": k}


class SeparationFlow(Adversary):
    """x_0 = (all-plus, 0) and x_t = (all-plus, eps_t t)."""

    id = "separation_flow"

    def __init__(self, family: Separation, T: int):
        if not isinstance(family, Separation):
            raise CapabilityError("separation_flow runs on separation families")
        if family.zmax < T:
            raise SpecError("separation_flow needs zmax >= T")
        super().__init__(family, T)

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        eps = rng.integers(0, 2, size=self.T) * 2 - 1
        ones = self.family.ones
        return Stream((ones, 0), [(ones, int(e) * t) for t, e in enumerate(eps, start=1)])


class MemberFlow(Adversary):
    """Realizable stream: the flow of a (random or given) member from x0."""

    id = "member_flow"
    realizable = True

    def __init__(self, family: Any, T: int, x0: Any = None, member: Any = None):
        super().__init__(family, T)
        self.x0 = x0
        self.member = member

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        fam = self.family
        if fam.enumerated:
            f = int(rng.integers(fam.member_count)) if self.member is None else self.member
            x0 = int(rng.integers(fam.size)) if self.x0 is None else self.x0
        else:
            f = fam.sample_member(rng) if self.member is None else self.member
            if self.x0 is None:
                raise SpecError("implicit families need an explicit x0")
            x0 = self.x0
        return Stream(x0, fam.flow(f, x0, self.T))


class RandomStream(Adversary):
    """Uniformly random states (enumerated families)."""

    id = "random_stream"

    def __init__(self, family: EvolutionFamily, T: int):
        require_enumerated(family, self.id)
        super().__init__(family, T)

    def sample(self, seed: int) -> Stream:
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, self.family.size, size=self.T + 1).tolist()
        return Stream(xs[0], xs[1:])


REGISTRY: Dict[str, type] = {
    cls.id: cls
    for cls in (
        TreeDeterministic,
        TreeRandomPath,
        LowRankForcing,
        BooleanForcing,
        LittlestoneBlock,
        TwoFunction,
        MarkovianTightness,
        SignStream,
        SwitchingTightness,
        SeparationFlow,
        MemberFlow,
        RandomStream,
    )
}


def build_adversary(name: str, family: Any, params: Optional[Dict[str, Any]] = None) -> Adversary:
    if name not in REGISTRY:
        raise SpecError(f"unknown adversary {name!r}; known: {', '.join(sorted(REGISTRY))}")
    try:
        return REGISTRY[name](family, **(params or {}))
    except TypeError as exc:
        raise SpecError(f"bad parameters for adversary {name}: {exc}") from exc
