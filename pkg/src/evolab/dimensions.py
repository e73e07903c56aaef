"""Evolution complexity, Evolution dimension, Branching, Littlestone and DS dimensions.

All recursions are memoized per family in ``family.cache`` and keyed on
version-space bitmasks. Tie-breaks are lowest state index first.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from evolab.core import EvolutionFamily, SpecError, require_enumerated
from evolab.trees import TrajectoryTree, prefix_key

NEG_INF = float("-inf")

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


def _log2_floor(n: int) -> int:
    return n.bit_length() - 1


# ---------------------------------------------------------------------------
# Evolution complexity
# ---------------------------------------------------------------------------


class ComplexityTable:
    """Memoized C_d(V, x) for one family."""

    def __init__(self, family: EvolutionFamily):
        self.family = family
        self.memo: Dict[Tuple[int, int, int], int] = {}

    def children(self, mask: int, x: int) -> List[Tuple[int, int]]:
        row = self.family.masks[x]
        out = []
        for y in self.family.full_projection[x]:
            sub = mask & row[y]
            if sub:
                out.append((y, sub))
        return out

    def value(self, mask: int, x: int, d: int) -> int:
        if mask == 0:
            raise SpecError("complexity of an empty version space is undefined")
        if d <= 0 or mask & (mask - 1) == 0:
            return 0
        key = (mask, x, d)
        v = self.memo.get(key)
        if v is not None:
            return v
        vals = [self.value(sub, y, d - 1) for y, sub in self.children(mask, x)]
        if len(vals) == 1:
            v = vals[0]
        else:
            vals.sort(reverse=True)
            v = max(vals[0], 1 + vals[1])
        self.memo[key] = v
        return v

    def witness(self, mask: int, x: int, d: int) -> TrajectoryTree:
        return TrajectoryTree(self._witness_levels(mask, x, d))

    def _witness_levels(self, mask: int, x: int, d: int) -> List[List[int]]:
        if d == 0:
            return [[x]]
        kids = [(y, sub, self.value(sub, y, d - 1)) for y, sub in self.children(mask, x)]
        m1 = max(v for _, _, v in kids)
        first = next(k for k in kids if k[2] == m1)
        rest = [k for k in kids if k[0] != first[0]]
        if rest:
            m2 = max(v for _, _, v in rest)
            second = next(k for k in rest if k[2] == m2)
        if rest and 1 + m2 >= m1:
            lo, hi = sorted((first, second), key=lambda k: k[0])
            left = self._witness_levels(lo[1], lo[0], d - 1)
            right = self._witness_levels(hi[1], hi[0], d - 1)
        else:
            left = right = self._witness_levels(first[1], first[0], d - 1)
        return [[x]] + [a + b for a, b in zip(left, right)]


def complexity_table(family: EvolutionFamily) -> ComplexityTable:
    require_enumerated(family, "evolution complexity")
    tab = family.cache.get("complexity")
    if tab is None:
        tab = family.cache["complexity"] = ComplexityTable(family)
    return tab


def instance_complexity(family: EvolutionFamily, mask: int, x: int, d: int) -> float:
    """C_d(V, x); minus infinity for an empty version space."""
    if mask == 0:
        return NEG_INF
    return complexity_table(family).value(mask, x, d)


def evolution_complexity(
    family: EvolutionFamily, T: int, root: Optional[int] = None
) -> Tuple[int, TrajectoryTree]:
    if T < 0:
        raise SpecError("T must be nonnegative")
    tab = complexity_table(family)
    full = family.full_mask
    roots = range(family.size) if root is None else [family.space.check(root)]
    best, best_root = -1, 0
    for x in roots:
        v = tab.value(full, x, T)
        if v > best:
            best, best_root = v, x
    return best, tab.witness(full, best_root, T)


def complexity_profile(family: EvolutionFamily, T: int) -> List[int]:
    """[C_0, C_1, ..., C_T] for the whole family."""
    tab = complexity_table(family)
    return [max(tab.value(family.full_mask, x, t) for x in range(family.size)) for t in range(T + 1)]


# ---------------------------------------------------------------------------
# Branching dimension
# ---------------------------------------------------------------------------


def branching_dimension(family: EvolutionFamily) -> Tuple[int, int]:
    """Stabilized limit of C_t by value iteration on the reachable (V, x) graph.

    Returns (dimension, first depth t at which a full sweep changed nothing).
    """
    require_enumerated(family, "branching dimension")
    cached = family.cache.get("branching")
    if cached is not None:
        return cached
    tab = complexity_table(family)
    index: Dict[Tuple[int, int], int] = {}
    kids: List[List[int]] = []
    stack = []
    for x in range(family.size):
        key = (family.full_mask, x)
        if key not in index:
            index[key] = len(kids)
            kids.append([])
            stack.append(key)
    while stack:
        mask, x = stack.pop()
        i = index[(mask, x)]
        if mask & (mask - 1) == 0:
            continue  # a single member never branches
        for y, sub in tab.children(mask, x):
            key = (sub, y)
            j = index.get(key)
            if j is None:
                j = index[key] = len(kids)
                kids.append([])
                stack.append(key)
            kids[i].append(j)
    values = [0] * len(kids)
    t = 0
    while True:
        new = []
        for ch in kids:
            if not ch:
                new.append(0)
            elif len(ch) == 1:
                new.append(values[ch[0]])
            else:
                vs = sorted((values[j] for j in ch), reverse=True)
                new.append(max(vs[0], 1 + vs[1]))
        t += 1
        if new == values:
            break
        values = new
    roots = [index[(family.full_mask, x)] for x in range(family.size)]
    result = (max(values[r] for r in roots), t - 1)
    family.cache["branching"] = result
    return result


# ---------------------------------------------------------------------------
# Evolution dimension and the sandwich inequality
# ---------------------------------------------------------------------------


def as_fraction(gamma: Any) -> Fraction:
    if isinstance(gamma, float):
        raise SpecError("gamma must be rational (int, Fraction or 'p/q' string), not float")
    try:
        g = Fraction(gamma)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"bad gamma {gamma!r}") from exc
    if g <= 0:
        raise SpecError("gamma must be positive")
    return g


def evolution_dimension(family: EvolutionFamily, gamma: Any) -> int:
    """E_gamma = max{d >= 1 : C_d >= gamma d}, or 0."""
    g = as_fraction(gamma)
    bound = min(_log2_floor(family.member_count), branching_dimension(family)[0])
    d_max = int(Fraction(bound) / g)
    tab = complexity_table(family)
    best = 0
    for d in range(1, d_max + 1):
        c = max(tab.value(family.full_mask, x, d) for x in range(family.size))
        if c >= g * d:
            best = d
    return best


@dataclass
class SandwichRow:
    gamma: Fraction
    E: int
    C_T: int
    lower: Fraction
    upper: Fraction
    ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": str(self.gamma),
            "E": self.E,
            "C_T": self.C_T,
            "lower": str(self.lower),
            "upper": str(self.upper),
            "ok": self.ok,
        }


def sandwich_check(family: EvolutionFamily, T: int, gammas: Sequence[Any]) -> Tuple[bool, List[SandwichRow]]:
    c_t = evolution_complexity(family, T)[0]
    rows = []
    for gamma in gammas:
        g = as_fraction(gamma)
        e = evolution_dimension(family, g)
        lower = g * e - max(e - T, 0)
        upper = g * max(e, T) + g
        rows.append(SandwichRow(g, e, c_t, lower, upper, lower <= c_t <= upper))
    return all(r.ok for r in rows), rows


# ---------------------------------------------------------------------------
# Littlestone dimension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LittlestoneTree:
    """node_levels[t] has 2**t instance labels (t < depth); edge_levels[t-1] has 2**t labels."""

    depth: int
    node_levels: Tuple[Tuple[int, ...], ...]
    edge_levels: Tuple[Tuple[int, ...], ...]

    def path(self, bits: Sequence[int]) -> Tuple[List[int], List[int]]:
        nodes, edges = [], []
        p = 0
        for t, b in enumerate(bits):
            nodes.append(self.node_levels[t][p])
            p = 2 * p + (1 if b else 0)
            edges.append(self.edge_levels[t][p])
        return nodes, edges

    def to_dict(self) -> Dict[str, Any]:
        labels = {prefix_key(t, p): x for t, lv in enumerate(self.node_levels) for p, x in enumerate(lv)}
        edges = {prefix_key(t + 1, p): y for t, lv in enumerate(self.edge_levels) for p, y in enumerate(lv)}
        return {"depth": self.depth, "labels": labels, "edge_labels": edges}


class LittlestoneTable:
    def __init__(self, family: EvolutionFamily):
        self.family = family
        self.memo: Dict[int, int] = {}

    def value(self, mask: int) -> int:
        if mask == 0:
            raise SpecError("Littlestone dimension of an empty version space is undefined")
        if mask & (mask - 1) == 0:
            return 0
        v = self.memo.get(mask)
        if v is not None:
            return v
        fam = self.family
        cap = _log2_floor(mask.bit_count())
        best = 0
        for x in range(fam.size):
            row = fam.masks[x]
            subs = [mask & row[y] for y in fam.full_projection[x]]
            subs = [s for s in subs if s]
            if len(subs) < 2:
                continue
            # only splits whose second-largest child can beat the incumbent matter
            subs.sort(key=lambda s: s.bit_count(), reverse=True)
            if _log2_floor(subs[1].bit_count()) + 1 <= best:
                continue
            vals = sorted((self.value(s) for s in subs), reverse=True)
            best = max(best, 1 + vals[1])
            if best >= cap:
                break
        self.memo[mask] = best
        return best

    def witness(self, mask: int, depth: int) -> LittlestoneTree:
        node_levels: List[List[int]] = [[] for _ in range(depth)]
        edge_levels: List[List[int]] = [[] for _ in range(depth)]

        # breadth-first so nodes are appended in prefix order
        queue = [mask]
        for t in range(depth):
            nxt = []
            need = depth - t - 1
            fam = self.family
            for m in queue:
                for x in range(fam.size):
                    good = [(y, m & fam.masks[x][y]) for y in fam.full_projection[x]]
                    good = [(y, s) for y, s in good if s and self.value(s) >= need]
                    if len(good) >= 2:
                        (y1, s1), (y2, s2) = good[0], good[1]
                        node_levels[t].append(x)
                        edge_levels[t].extend((y1, y2))
                        nxt.extend((s1, s2))
                        break
                else:
                    raise AssertionError("no split available; Littlestone value inconsistent")
            queue = nxt
        return LittlestoneTree(depth, tuple(map(tuple, node_levels)), tuple(map(tuple, edge_levels)))


def littlestone_table(family: EvolutionFamily) -> LittlestoneTable:
    require_enumerated(family, "Littlestone dimension")
    tab = family.cache.get("littlestone")
    if tab is None:
        tab = family.cache["littlestone"] = LittlestoneTable(family)
    return tab


def littlestone_dimension(family: EvolutionFamily, mask: Optional[int] = None) -> Tuple[int, LittlestoneTree]:
    tab = littlestone_table(family)
    mask = family.full_mask if mask is None else mask
    d = tab.value(mask)
    return d, tab.witness(mask, d)


def littlestone_path_member(family: EvolutionFamily, tree: LittlestoneTree, bits: Sequence[int]) -> Optional[int]:
    nodes, edges = tree.path(bits)
    mask = family.full_mask
    for x, y in zip(nodes, edges):
        mask &= family.masks[x][y]
    return (mask & -mask).bit_length() - 1 if mask else None


def is_littlestone_shattered(family: EvolutionFamily, tree: LittlestoneTree) -> bool:
    for t, lv in enumerate(tree.edge_levels):
        for p in range(0, len(lv), 2):
            if lv[p] == lv[p + 1]:
                return False
    for leaf in range(2**tree.depth):
        bits = [(leaf >> (tree.depth - 1 - i)) & 1 for i in range(tree.depth)]
        if littlestone_path_member(family, tree, bits) is None:
            return False
    return True


# ---------------------------------------------------------------------------
# DS dimension
# ---------------------------------------------------------------------------


def ds_shattered(family: EvolutionFamily, A: Sequence[int]) -> bool:
    require_enumerated(family, "DS shattering")
    A = sorted(set(family.space.check(a) for a in A))
    if not A:
        raise SpecError("A must be nonempty")
    H = set(map(tuple, family.table[:, A].tolist()))
    k = len(A)
    while True:
        keep = set(H)
        for i in range(k):
            groups: Dict[Tuple[int, ...], int] = {}
            for h in keep:
                key = h[:i] + h[i + 1 :]
                groups[key] = groups.get(key, 0) + 1
            keep = {h for h in keep if groups[h[:i] + h[i + 1 :]] >= 2}
        if keep == H:
            return bool(H)
        H = keep


@dataclass
class DSResult:
    value: int
    exact: bool
    witness: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "exact": self.exact, "lower_bound_only": not self.exact, "witness": list(self.witness)}


def ds_dimension(family: EvolutionFamily, cap: int = 3) -> DSResult:
    """Largest DS-shattered subset of size <= cap.

    Shattering is hereditary, so the search stops at the first size with no
    shattered subset. Hitting the cap with a shattered set leaves a lower bound.
    """
    require_enumerated(family, "DS dimension")
    if cap < 1:
        raise SpecError("cap must be >= 1")
    best: Tuple[int, ...] = ()
    for k in range(1, min(cap, family.size) + 1):
        found = None
        for A in itertools.combinations(range(family.size), k):
            if ds_shattered(family, A):
                found = A
                break
        if found is None:
            return DSResult(k - 1, True, best)
        best = found
    exact = cap >= family.size
    return DSResult(len(best), exact, best)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class DimensionReport:
    family: Dict[str, Any]
    member_count: int
    state_count: int
    T: int
    complexity: List[int]
    evolution_dimension: Dict[str, int] = field(default_factory=dict)
    branching_dim: Optional[int] = None
    littlestone_dim: Optional[int] = None
    ds: Optional[DSResult] = None
    sandwich: Optional[List[SandwichRow]] = None
    witnesses: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "family": self.family,
            "member_count": self.member_count,
            "state_count": self.state_count,
            "T": self.T,
            "C": self.complexity,
            "C_T": self.complexity[-1],
            "E_gamma": self.evolution_dimension,
            "branching_dim": self.branching_dim,
            "littlestone_dim": self.littlestone_dim,
            "ds_dim": self.ds.to_dict() if self.ds else None,
        }
        if self.sandwich is not None:
            out["sandwich"] = [r.to_dict() for r in self.sandwich]
        if self.witnesses:
            out["witnesses"] = self.witnesses
        return out


def dimension_report(
    family: EvolutionFamily,
    T: int,
    gammas: Sequence[Any] = (),
    ldim: bool = False,
    dsdim: bool = False,
    ds_cap: int = 3,
    branching: bool = False,
    witnesses: bool = False,
) -> DimensionReport:
    require_enumerated(family, "dims")
    profile = complexity_profile(family, T)
    rep = DimensionReport(family.spec(), family.member_count, family.size, T, profile)
    for g in gammas:
        rep.evolution_dimension[str(as_fraction(g))] = evolution_dimension(family, g)
    if gammas:
        rep.sandwich = sandwich_check(family, T, gammas)[1]
    if branching or gammas:
        rep.branching_dim = branching_dimension(family)[0]
    lt = None
    if ldim:
        rep.littlestone_dim, lt = littlestone_dimension(family)
    if dsdim:
        rep.ds = ds_dimension(family, ds_cap)
    if witnesses:
        rep.witnesses["C_T"] = evolution_complexity(family, T)[1].to_dict()
        if lt is not None:
            rep.witnesses["littlestone"] = lt.to_dict()
    return rep
