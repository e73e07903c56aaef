"""Constructors for the evolution families studied here.

Integer-valued families live on [-w, w] with the sign-magnitude codec
(0, 1, -1, 2, -2, ...). States with |x| = w are absorbing, so every table is
a total map; computed values are exact only while trajectories stay inside
the window (|x0| + T <= w).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from evolab.core import (
    CapabilityError,
    EvolutionFamily,
    ImplicitFamily,
    SpecError,
    StateSpace,
    Stream,
    signed_range,
)
from evolab.exact import matvec, rank


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecError(msg)


def _as_int(v: Any, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        if isinstance(v, str) and v.lstrip("-").isdigit():
            return int(v)
        raise SpecError(f"{name} must be an integer, got {v!r}")
    return int(v)


# ---------------------------------------------------------------------------
# generic families
# ---------------------------------------------------------------------------


def from_table(table: Sequence[Sequence[int]], size: Optional[int] = None, name: str = "table") -> EvolutionFamily:
    rows = [list(map(int, r)) for r in table]
    _require(len(rows) >= 1, "table needs at least one row")
    size = len(rows[0]) if size is None else int(size)
    return EvolutionFamily(name, StateSpace(size), rows, {"table": rows})


def identity(size: int) -> EvolutionFamily:
    size = _as_int(size, "size")
    return EvolutionFamily("identity", StateSpace(size), [list(range(size))], {"size": size})


def full(size: int) -> EvolutionFamily:
    """All of X^X."""
    size = _as_int(size, "size")
    _require(1 <= size <= 4, "full(size) is enumerated only for size <= 4")
    rows = [list(r) for r in itertools.product(range(size), repeat=size)]
    return EvolutionFamily("full", StateSpace(size), rows, {"size": size})


def random_subfamily(size: int, members: int, seed: int) -> EvolutionFamily:
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, size, size=(members, size))
    return EvolutionFamily("random", StateSpace(size), rows, {"size": size, "members": members, "seed": seed})


# ---------------------------------------------------------------------------
# Boolean networks
# ---------------------------------------------------------------------------


def _bool_family(name: str, n: int, rule: Callable[[List[List[int]], Tuple[int, ...]], Tuple[int, ...]]) -> EvolutionFamily:
    space = StateSpace.bits(n)
    rows, labels = [], []
    for w in range(2 ** (n * n)):
        W = [[(w >> (i * n + j)) & 1 for j in range(n)] for i in range(n)]
        rows.append([space.encode(rule(W, x)) for x in space.labels])
        labels.append(";".join("".join(map(str, r)) for r in W))
    return EvolutionFamily(name, space, rows, {"n": n}, member_labels=labels)


def bool_mod2(n: int) -> EvolutionFamily:
    """x -> W x (mod 2) over W in {0,1}^{n x n}."""
    n = _as_int(n, "n")
    _require(1 <= n <= 3, "bool_mod2 is enumerated for 1 <= n <= 3")
    return _bool_family(
        "bool_mod2", n, lambda W, x: tuple(sum(a * b for a, b in zip(row, x)) % 2 for row in W)
    )


def bool_threshold(n: int) -> EvolutionFamily:
    """x -> 1{W x > 0} over W in {0,1}^{n x n}."""
    n = _as_int(n, "n")
    _require(1 <= n <= 3, "bool_threshold is enumerated for 1 <= n <= 3")
    return _bool_family(
        "bool_threshold", n, lambda W, x: tuple(int(sum(a * b for a, b in zip(row, x)) > 0) for row in W)
    )


# ---------------------------------------------------------------------------
# integer families
# ---------------------------------------------------------------------------


def _sign_table(w: int, signs: Sequence[Callable[[int], int]]) -> Tuple[StateSpace, List[List[int]]]:
    space = StateSpace.integers(signed_range(w))
    rows = []
    for sign in signs:
        row = []
        for x in space.labels:
            k = abs(x)
            row.append(space.encode(x if k >= w else sign(k) * (k + 1)))
        rows.append(row)
    return space, rows


def f_s_family(S: Iterable[int], w: int, name: str = "f_s") -> EvolutionFamily:
    """f_sigma(x) = (sigma_|x| 1{|x| in S} + 1{|x| not in S}) (|x| + 1), truncated at |x| = w."""
    w = _as_int(w, "w")
    _require(w >= 1, "window w must be >= 1")
    S = sorted({_as_int(s, "S element") for s in S})
    _require(all(s >= 0 for s in S), "S must contain nonnegative integers")
    active = [s for s in S if s < w]
    signs, labels = [], []
    for bits in itertools.product((1, -1), repeat=len(active)):
        sigma = dict(zip(active, bits))
        signs.append(lambda k, sigma=sigma: sigma.get(k, 1))
        labels.append("".join("+" if b > 0 else "-" for b in bits))
    space, rows = _sign_table(w, signs)
    return EvolutionFamily(name, space, rows, {"S": S, "w": w}, member_labels=labels)


def signed_capped(p: int, w: int) -> EvolutionFamily:
    """Branching only on magnitudes 0..p-1."""
    p = _as_int(p, "p")
    _require(p >= 0, "p must be >= 0")
    fam = f_s_family(range(p), w, name="signed_capped")
    fam.params = {"p": p, "w": fam.params["w"]}
    return fam


def switching(p: int, w: int) -> EvolutionFamily:
    """f_{sigma,S}(x) = sigma_{S_|x|} (|x| + 1) with S = (0, s_1 < ... < s_p)."""
    p, w = _as_int(p, "p"), _as_int(w, "w")
    _require(p >= 0 and w >= max(p, 1), "switching needs p >= 0 and w >= max(p, 1)")
    signs, labels = [], []
    for rest in itertools.combinations(range(1, w + 1), p):
        S = (0,) + rest
        for sig in itertools.product((1, -1), repeat=p + 1):

            def sign(k: int, S: Tuple[int, ...] = S, sig: Tuple[int, ...] = sig) -> int:
                j = max(i for i, s in enumerate(S) if s <= k)
                return sig[j]

            signs.append(sign)
            labels.append(",".join(map(str, S)) + "|" + "".join("+" if b > 0 else "-" for b in sig))
    space, rows = _sign_table(w, signs)
    return EvolutionFamily("switching", space, rows, {"p": p, "w": w}, member_labels=labels)


def markovian_tightness(d: int) -> EvolutionFamily:
    """X = {1..d} u {+-(d+1)..+-2d}; f_sigma(x) = sigma_x (d + x) on [d], |x| - d elsewhere."""
    d = _as_int(d, "d")
    _require(1 <= d <= 8, "markovian_tightness is enumerated for 1 <= d <= 8")
    labels = sorted(list(range(1, d + 1)) + [s * v for v in range(d + 1, 2 * d + 1) for s in (1, -1)])
    space = StateSpace.integers(labels)
    rows, names = [], []
    for sig in itertools.product((1, -1), repeat=d):
        row = []
        for x in labels:
            y = sig[x - 1] * (d + x) if 1 <= x <= d else abs(x) - d
            row.append(space.encode(y))
        rows.append(row)
        names.append("".join("+" if b > 0 else "-" for b in sig))
    return EvolutionFamily("markovian_tightness", space, rows, {"d": d}, member_labels=names)


# ---------------------------------------------------------------------------
# thresholds on a rational grid
# ---------------------------------------------------------------------------


def thresholds_grid(m: int) -> EvolutionFamily:
    """x -> 1{x >= a} on the grid {0, 1/m, ..., 1}.

    Thresholds a in (0, 1) induce exactly m distinct maps on the grid; the
    representative of the k-th one is the midpoint a_k = (2k - 1) / (2m).
    """
    m = _as_int(m, "m")
    _require(m >= 2, "grid size m must be >= 2")
    space = StateSpace.fractions([Fraction(j, m) for j in range(m + 1)])
    zero, one = space.encode(Fraction(0)), space.encode(Fraction(1))
    rows, labels = [], []
    for k in range(1, m + 1):
        a = Fraction(2 * k - 1, 2 * m)
        rows.append([one if x >= a else zero for x in space.labels])
        labels.append(str(a))
    return EvolutionFamily("thresholds_grid", space, rows, {"m": m}, member_labels=labels)


# ---------------------------------------------------------------------------
# implicit families
# ---------------------------------------------------------------------------

Matrix = Tuple[Tuple[int, ...], ...]


class LowRankLinear(ImplicitFamily):
    """x -> W x over Z^n with rank(W) <= r. Members are integer matrices."""

    capabilities = frozenset({"realizable_games"})

    def __init__(self, n: int, r: int, entry_bound: int = 2):
        n, r, b = _as_int(n, "n"), _as_int(r, "r"), _as_int(entry_bound, "entry_bound")
        _require(0 <= r < n, "lowrank_linear needs 0 <= r < n")
        _require(b >= 1, "entry_bound must be >= 1")
        self.n, self.r, self.entry_bound = n, r, b
        self.name = "lowrank_linear"
        self.params = {"n": n, "r": r, "entry_bound": b}

    def check_member(self, W: Sequence[Sequence[int]]) -> Matrix:
        W = tuple(tuple(int(v) for v in row) for row in W)
        if len(W) != self.n or any(len(row) != self.n for row in W):
            raise SpecError(f"member must be a {self.n}x{self.n} integer matrix")
        if rank(W) > self.r:
            raise SpecError(f"member has rank > {self.r}")
        return W

    def apply(self, member: Matrix, x: Sequence[int]) -> Tuple[int, ...]:
        return matvec(member, x)

    def zero(self) -> Tuple[int, ...]:
        return (0,) * self.n

    def basis(self, i: int, sign: int = 1) -> Tuple[int, ...]:
        return tuple(sign if j == i else 0 for j in range(self.n))

    def consistent(self, member: Matrix, stream: Stream) -> bool:
        return all(matvec(member, a) == tuple(b) for a, b in stream.pairs())

    def sample_member(self, rng: np.random.Generator) -> Matrix:
        b = self.entry_bound
        while True:
            W = np.zeros((self.n, self.n), dtype=np.int64)
            for _ in range(self.r):
                u = rng.integers(-b, b + 1, size=self.n)
                v = rng.integers(-1, 2, size=self.n)
                W += np.outer(u, v)
            if np.abs(W).max() <= b and W.any():
                M = tuple(tuple(int(v) for v in row) for row in W)
                if rank(M) <= self.r:
                    return M

    def format_state(self, x: Sequence[int]) -> str:
        return ",".join(str(v) for v in x)

    def parse_state(self, text: str) -> Tuple[int, ...]:
        try:
            vals = tuple(int(v) for v in text.split(","))
        except ValueError:
            raise SpecError(f"bad integer vector {text!r}") from None
        if len(vals) != self.n:
            raise SpecError(f"expected {self.n} coordinates in {text!r}")
        return vals


SepState = Tuple[str, int]


class Separation(ImplicitFamily):
    """States (theta, z) with theta a sign string of length m and |z| <= zmax.

    f_sigma((theta, z)) = (theta', s_k k) with k = |z| + 1, s_k = sigma_k for
    k <= m and + otherwise, theta' = sigma when k = 0 mod 3 and all-plus
    otherwise. |z| = zmax is absorbing. Members are sign strings sigma, indexed
    by reading '-' as a 1 bit (bit i for sigma_{i+1}).
    """

    capabilities = frozenset({"realizable_games", "markovian_comparator", "flow_comparator"})

    def __init__(self, m: int, zmax: int):
        m, zmax = _as_int(m, "m"), _as_int(zmax, "zmax")
        _require(m >= 1, "m must be >= 1")
        _require(zmax >= 3, "zmax must be >= 3")
        self.m, self.zmax = m, zmax
        self.ones = "+" * m
        self.name = "separation"
        self.params = {"m": m, "zmax": zmax}

    # members and states --------------------------------------------------

    def member_index(self, sigma: str) -> int:
        return sum(1 << i for i, c in enumerate(sigma) if c == "-")

    def member_from_index(self, idx: int) -> str:
        return "".join("-" if (idx >> i) & 1 else "+" for i in range(self.m))

    def check_member(self, sigma: str) -> str:
        if len(sigma) != self.m or set(sigma) - {"+", "-"}:
            raise SpecError(f"member must be a sign string of length {self.m}")
        return sigma

    def check_state(self, x: SepState) -> SepState:
        theta, z = x
        if len(theta) != self.m or set(theta) - {"+", "-"} or abs(z) > self.zmax:
            raise SpecError(f"invalid separation state {x!r}")
        return (theta, int(z))

    def sign(self, sigma: str, k: int) -> int:
        return (1 if sigma[k - 1] == "+" else -1) if k <= self.m else 1

    def apply(self, sigma: str, x: SepState) -> SepState:
        theta, z = x
        if abs(z) >= self.zmax:
            return x
        k = abs(z) + 1
        return (sigma if k % 3 == 0 else self.ones, self.sign(sigma, k) * k)

    def sample_member(self, rng: np.random.Generator) -> str:
        return "".join("+" if b else "-" for b in rng.integers(0, 2, size=self.m))

    def format_state(self, x: SepState) -> str:
        return f"{x[0]}:{x[1]}"

    def parse_state(self, text: str) -> SepState:
        try:
            theta, z = text.strip().split(":")
            return self.check_state((theta, int(z)))
        except ValueError:
            raise SpecError(f"bad separation state {text!r}") from None

    def is_realizable(self, stream: Stream) -> Tuple[bool, Optional[str]]:
        loss, sigma = self.markovian_comparator(stream)
        return loss == 0, sigma if loss == 0 else None

    # closed-form comparators ---------------------------------------------

    def _solve(self, rounds: List[Tuple[Any, ...]]) -> Tuple[int, str]:
        """rounds: ("fixed", loss) or ("k", k, theta_round, observed_state)."""
        fixed = 0
        votes = [[0, 0] for _ in range(self.m)]  # cost of choosing + / - per coordinate
        theta_rounds = []
        plain = []
        for r in rounds:
            if r[0] == "fixed":
                fixed += r[1]
                continue
            _, k, theta_round, (theta_obs, z_obs) = r
            if theta_round:
                theta_rounds.append((k, theta_obs, z_obs))
                continue
            plain.append((k, theta_obs, z_obs))
            if theta_obs != self.ones or abs(z_obs) != k:
                fixed += 1
            elif k > self.m:
                fixed += int(z_obs != k)
            else:
                votes[k - 1][0 if z_obs < 0 else 1] += 1  # choosing + costs when z_obs < 0

        sep = "".join("+" if c[0] <= c[1] else "-" for c in votes)
        sep_loss = fixed + sum(min(c) for c in votes) + len(theta_rounds)

        def exact(sigma: str) -> int:
            loss = fixed + sum(votes[i][0 if c == "+" else 1] for i, c in enumerate(sigma))
            for k, theta_obs, z_obs in theta_rounds:
                loss += int(theta_obs != sigma or z_obs != self.sign(sigma, k) * k)
            return loss

        best = (exact(sep), self.member_index(sep), sep)
        for sigma in sorted({t for _, t, _ in theta_rounds}):
            if len(sigma) == self.m and not set(sigma) - {"+", "-"}:
                cand = (exact(sigma), self.member_index(sigma), sigma)
                best = min(best, cand)
        assert best[0] <= sep_loss
        return best[0], best[2]

    def markovian_comparator(self, stream: Stream) -> Tuple[int, str]:
        rounds: List[Tuple[Any, ...]] = []
        for prev, cur in stream.pairs():
            if abs(prev[1]) >= self.zmax:
                rounds.append(("fixed", int(prev != cur)))
            else:
                k = abs(prev[1]) + 1
                rounds.append(("k", k, k % 3 == 0, cur))
        return self._solve(rounds)

    def flow_comparator(self, stream: Stream) -> Tuple[int, str]:
        rounds: List[Tuple[Any, ...]] = []
        z0 = abs(stream.x0[1])
        for t, cur in enumerate(stream.states, start=1):
            if z0 >= self.zmax:
                rounds.append(("fixed", int(stream.x0 != cur)))
            else:
                k = min(z0 + t, self.zmax)
                rounds.append(("k", k, k % 3 == 0, cur))
        return self._solve(rounds)

    def brute_force(self, stream: Stream, flow: bool) -> Tuple[int, str]:
        best = None
        for idx in range(2**self.m):
            sigma = self.member_from_index(idx)
            if flow:
                traj = self.flow(sigma, stream.x0, stream.T)
                loss = sum(a != b for a, b in zip(traj, stream.states))
            else:
                loss = sum(self.apply(sigma, a) != b for a, b in stream.pairs())
            if best is None or loss < best[0]:
                best = (loss, sigma)
        assert best is not None
        return best


def lowrank_linear(n: int, r: int, entry_bound: int = 2) -> LowRankLinear:
    return LowRankLinear(n, r, entry_bound)


def separation(m: int, zmax: int) -> Separation:
    return Separation(m, zmax)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

REGISTRY: Dict[str, Callable[..., Any]] = {
    "identity": identity,
    "full": full,
    "table": from_table,
    "random": random_subfamily,
    "bool_mod2": bool_mod2,
    "bool_threshold": bool_threshold,
    "f_s": f_s_family,
    "signed_capped": signed_capped,
    "switching": switching,
    "markovian_tightness": markovian_tightness,
    "thresholds_grid": thresholds_grid,
    "lowrank_linear": lowrank_linear,
    "separation": separation,
}


def build_family(name: str, params: Optional[Dict[str, Any]] = None) -> Any:
    if name not in REGISTRY:
        raise SpecError(f"unknown family {name!r}; known: {', '.join(sorted(REGISTRY))}")
    try:
        return REGISTRY[name](**(params or {}))
    except TypeError as exc:
        raise SpecError(f"bad parameters for {name}: {exc}") from exc


def catalog_sweep() -> List[EvolutionFamily]:
    """Enumerated catalog instances used by the whole-catalog checks."""
    return [
        bool_mod2(2),
        bool_mod2(3),
        bool_threshold(2),
        f_s_family([0, 2], 8),
        f_s_family([1, 2, 4], 8),
        thresholds_grid(4),
        thresholds_grid(8),
        signed_capped(2, 8),
        signed_capped(3, 8),
        switching(1, 6),
        switching(2, 6),
        markovian_tightness(3),
        full(2),
        full(3),
        identity(3),
    ]
