"""Trajectory trees, shattering, branching factor and the brute-force oracle.

A tree of depth d is stored level by level: ``levels[t][p]`` is the label of
the node reached by the bit prefix p (an integer with t bits, most significant
bit first, 0 meaning the -1 branch). The children of (t, p) are (t+1, 2p) and
(t+1, 2p+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from evolab.core import BudgetError, EvolutionFamily, SpecError, default_budget, require_enumerated


@dataclass(frozen=True)
class TrajectoryTree:
    depth: int
    levels: Tuple[Tuple[int, ...], ...]

    def __init__(self, levels: Sequence[Sequence[int]]):
        lv = tuple(tuple(int(v) for v in level) for level in levels)
        if not lv:
            raise SpecError("a tree needs at least a root")
        for t, level in enumerate(lv):
            if len(level) != 2**t:
                raise SpecError(f"level {t} must have {2**t} nodes, got {len(level)}")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "depth", len(lv) - 1)

    @property
    def root(self) -> int:
        return self.levels[0][0]

    def label(self, t: int, prefix: int) -> int:
        return self.levels[t][prefix]

    def path_states(self, bits: Sequence[int]) -> List[int]:
        """Trajectory (T_0, T_1, ..., T_d) along a path; bits are 0 (left) or 1 (right)."""
        if len(bits) != self.depth:
            raise SpecError("path length must equal tree depth")
        out = [self.root]
        p = 0
        for t, b in enumerate(bits, start=1):
            p = 2 * p + (1 if b else 0)
            out.append(self.levels[t][p])
        return out

    def paths(self) -> Iterator[Tuple[int, ...]]:
        for leaf in range(2**self.depth):
            yield tuple((leaf >> (self.depth - 1 - i)) & 1 for i in range(self.depth))

    def truncate(self, depth: int) -> "TrajectoryTree":
        return TrajectoryTree(self.levels[: depth + 1])

    def to_dict(self) -> Dict[str, Any]:
        labels = {}
        for t, level in enumerate(self.levels):
            for p, x in enumerate(level):
                labels[prefix_key(t, p)] = x
        return {"depth": self.depth, "labels": labels}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrajectoryTree":
        try:
            depth = int(data["depth"])
            labels = data["labels"]
            levels = [[int(labels[prefix_key(t, p)]) for p in range(2**t)] for t in range(depth + 1)]
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed tree JSON: {exc}") from exc
        return cls(levels)


def prefix_key(t: int, p: int) -> str:
    return format(p, f"0{t}b") if t else ""


def branching_factor(tree: TrajectoryTree) -> int:
    """min over root-to-leaf paths of the number of nodes whose children differ."""
    if tree.depth == 0:
        return 0
    below = [0] * (2**tree.depth)
    for t in range(tree.depth - 1, -1, -1):
        kids = tree.levels[t + 1]
        below = [
            (kids[2 * p] != kids[2 * p + 1]) + min(below[2 * p], below[2 * p + 1])
            for p in range(2**t)
        ]
    return below[0]


def path_witness_mask(tree: TrajectoryTree, family: EvolutionFamily, bits: Sequence[int]) -> int:
    masks = family.masks
    states = tree.path_states(bits)
    mask = family.full_mask
    for a, b in zip(states, states[1:]):
        mask &= masks[a][b]
        if not mask:
            break
    return mask


def is_shattered(tree: TrajectoryTree, family: EvolutionFamily) -> Tuple[bool, Dict[str, Optional[int]]]:
    """Check every path; witnesses map the path bit string to its lowest consistent member."""
    require_enumerated(family, "is_shattered")
    for level in tree.levels:
        for x in level:
            family.space.check(x)
    witnesses: Dict[str, Optional[int]] = {}
    ok = True
    for bits in tree.paths():
        mask = path_witness_mask(tree, family, bits)
        key = "".join(str(b) for b in bits)
        if mask:
            witnesses[key] = (mask & -mask).bit_length() - 1
        else:
            witnesses[key] = None
            ok = False
    return ok, witnesses


def _count_candidates(family: EvolutionFamily, depth: int, roots: Sequence[int]) -> int:
    """Label assignments the oracle visits: all labels whose path prefixes stay consistent."""
    masks = family.masks
    size = family.size
    memo: Dict[Tuple[int, int, int], int] = {}

    def count(mask: int, x: int, d: int) -> int:
        if d == 0:
            return 1
        key = (mask, x, d)
        if key not in memo:
            row = masks[x]
            s = 0
            for y in range(size):
                sub = mask & row[y]
                if sub:
                    s += count(sub, y, d - 1)
            memo[key] = s * s
        return memo[key]

    return sum(count(family.full_mask, x, depth) for x in roots)


def enumerate_shattered_trees(family: EvolutionFamily, depth: int, root: int) -> Iterator[TrajectoryTree]:
    """All depth-d trees rooted at ``root`` with labels drawn from the whole state space,
    in lexicographic order of (level, prefix) labels.

    Subtrees are abandoned as soon as one path prefix has no consistent member;
    such a tree can never pass ``is_shattered``, so nothing shattered is skipped.
    """
    masks = family.masks
    size = family.size

    def subtrees(mask: int, x: int, d: int) -> List[Tuple[Tuple[int, ...], ...]]:
        # returns subtrees as level tuples, lexicographically ordered
        if d == 0:
            return [((x,),)]
        kids: List[Tuple[Tuple[int, ...], ...]] = []
        for y in range(size):
            sub = mask & masks[x][y]
            if sub:
                kids.extend(subtrees(sub, y, d - 1))
        out = []
        for left in kids:
            for right in kids:
                out.append(((x,),) + tuple(a + b for a, b in zip(left, right)))
        return out

    for levels in sorted(subtrees(family.full_mask, root, depth), key=lambda lv: [v for level in lv for v in level]):
        yield TrajectoryTree(levels)


def brute_force_max_branching(
    family: EvolutionFamily,
    depth: int,
    root: Optional[int] = None,
    budget: Optional[int] = None,
) -> Tuple[int, Optional[TrajectoryTree]]:
    """Exact sup of B over shattered depth-d trees by exhaustive enumeration.

    Every candidate is re-checked with ``is_shattered`` and scored with
    ``branching_factor``; the lexicographically least maximizer is returned.
    """
    require_enumerated(family, "brute_force_max_branching")
    if depth < 0:
        raise SpecError("depth must be nonnegative")
    budget = default_budget() if budget is None else budget
    roots = list(range(family.size)) if root is None else [family.space.check(root)]
    need = _count_candidates(family, depth, roots)
    if need > budget:
        raise BudgetError(f"brute force needs {need} candidate trees, budget is {budget}", need, budget)
    best = -1
    best_tree: Optional[TrajectoryTree] = None
    for r in roots:
        for tree in enumerate_shattered_trees(family, depth, r):
            ok, _ = is_shattered(tree, family)
            if not ok:
                continue
            b = branching_factor(tree)
            if b > best:
                best, best_tree = b, tree
    return max(best, 0), best_tree
