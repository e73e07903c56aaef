"""State spaces, evolution families, streams, version spaces and comparators.

Enumerated families store a member-by-state table of state indices. Version
spaces are Python ints used as bitmasks over member indices, and the family
precomputes ``masks[x][y]`` (members sending x to y) so that restricting a
version space to a transition is a single ``&``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

DEFAULT_BUDGET = 10**7


class EvolabError(Exception):
    """Base class for typed errors raised by the library."""


class SpecError(EvolabError, ValueError):
    """Invalid parameters, specs or inputs."""


class CapabilityError(EvolabError):
    """The family does not support the requested operation."""


class BudgetError(EvolabError):
    """An enumeration would exceed the configured budget."""

    def __init__(self, message: str, required: Optional[int] = None, budget: Optional[int] = None):
        super().__init__(message)
        self.required = required
        self.budget = budget


def default_budget() -> int:
    raw = os.environ.get("EVOLAB_BUDGET")
    if raw is None or raw == "":
        return DEFAULT_BUDGET
    try:
        return int(float(raw))
    except ValueError as exc:
        raise SpecError(f"EVOLAB_BUDGET must be numeric, got {raw!r}") from exc


# ---------------------------------------------------------------------------
# state spaces
# ---------------------------------------------------------------------------

CODEC_KINDS = ("index", "bits", "int", "fraction", "sign_int")


def signed_range(w: int) -> List[int]:
    """Sign-magnitude ordering of [-w, w]: 0, 1, -1, 2, -2, ..."""
    out = [0]
    for k in range(1, w + 1):
        out.extend((k, -k))
    return out


class StateSpace:
    """Dense indices 0..size-1 with an optional bijective label codec."""

    def __init__(self, size: int, kind: str = "index", labels: Optional[Sequence[Hashable]] = None):
        if size < 1:
            raise SpecError("state space must be nonempty")
        if kind not in CODEC_KINDS:
            raise SpecError(f"unknown codec kind {kind!r}")
        if labels is None:
            if kind != "index":
                raise SpecError("structured codecs need labels")
            labels = list(range(size))
        labels = tuple(labels)
        if len(labels) != size:
            raise SpecError("label count must equal size")
        self.size = size
        self.kind = kind
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}
        if len(self._index) != size:
            raise SpecError("labels must be distinct")

    @classmethod
    def bits(cls, n: int) -> "StateSpace":
        # bit i of the index is coordinate i of the vector
        labels = [tuple((i >> j) & 1 for j in range(n)) for i in range(2**n)]
        return cls(2**n, "bits", labels)

    @classmethod
    def integers(cls, values: Sequence[int]) -> "StateSpace":
        return cls(len(values), "int", [int(v) for v in values])

    @classmethod
    def fractions(cls, values: Sequence[Fraction]) -> "StateSpace":
        return cls(len(values), "fraction", [Fraction(v) for v in values])

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateSpace) and self.kind == other.kind and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.kind, self.labels))

    def encode(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise SpecError(f"label {label!r} is not in the state space") from None

    def decode(self, index: int) -> Hashable:
        self.check(index)
        return self.labels[index]

    def check(self, index: int) -> int:
        if not (0 <= index < self.size):
            raise SpecError(f"state index {index} out of range [0, {self.size})")
        return index

    def format(self, index: int) -> str:
        return format_label(self.kind, self.decode(index))

    def parse(self, text: str) -> int:
        return self.encode(parse_label(self.kind, text))

    def to_dict(self) -> Dict[str, Any]:
        return {"size": self.size, "kind": self.kind, "labels": [format_label(self.kind, x) for x in self.labels]}


def format_label(kind: str, label: Any) -> str:
    if kind == "bits":
        return "".join(str(b) for b in label)
    if kind == "fraction":
        return str(Fraction(label))
    if kind == "sign_int":
        theta, z = label
        return f"{theta}:{z}"
    return str(label)


def parse_label(kind: str, text: str) -> Any:
    text = text.strip()
    try:
        if kind == "bits":
            if not text or set(text) - {"0", "1"}:
                raise ValueError(text)
            return tuple(int(c) for c in text)
        if kind == "fraction":
            return Fraction(text)
        if kind == "sign_int":
            theta, z = text.split(":")
            if set(theta) - {"+", "-"}:
                raise ValueError(text)
            return (theta, int(z))
        return int(text)
    except ValueError:
        raise SpecError(f"cannot parse state label {text!r} as {kind}") from None


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

ALL_CAPABILITIES = frozenset({"enumerable", "markovian_comparator", "flow_comparator", "dimensions_supported"})


class EvolutionFamily:
    """A finite family F of maps X -> X given as a deduplicated function table."""

    enumerated = True
    capabilities = ALL_CAPABILITIES

    def __init__(
        self,
        name: str,
        space: StateSpace,
        table: Any,
        params: Optional[Dict[str, Any]] = None,
        member_labels: Optional[Sequence[str]] = None,
    ):
        arr = np.asarray(table, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] != space.size:
            raise SpecError(f"table must have shape (members >= 1, {space.size})")
        if arr.min() < 0 or arr.max() >= space.size:
            raise SpecError("table entries must be valid state indices")
        # keep the first occurrence of each distinct row, in construction order
        _, first = np.unique(arr, axis=0, return_index=True)
        keep = np.sort(first)
        self.table = np.ascontiguousarray(arr[keep])
        self.table.setflags(write=False)
        self.name = name
        self.space = space
        self.params = dict(params or {})
        if member_labels is not None:
            if len(member_labels) != arr.shape[0]:
                raise SpecError("member_labels must match the table rows")
            self.member_labels: Optional[List[str]] = [member_labels[i] for i in keep]
        else:
            self.member_labels = None
        self.member_count = int(self.table.shape[0])
        self.size = space.size
        self.full_mask = (1 << self.member_count) - 1
        self._masks: Optional[List[List[int]]] = None
        self._proj: Optional[List[Tuple[int, ...]]] = None
        self.cache: Dict[str, Any] = {}

    def __repr__(self) -> str:
        return f"EvolutionFamily({self.name!r}, members={self.member_count}, states={self.size})"

    @property
    def masks(self) -> List[List[int]]:
        if self._masks is None:
            masks = [[0] * self.size for _ in range(self.size)]
            for i, row in enumerate(self.table.tolist()):
                bit = 1 << i
                for x, y in enumerate(row):
                    masks[x][y] |= bit
            self._masks = masks
        return self._masks

    @property
    def full_projection(self) -> List[Tuple[int, ...]]:
        """Sorted F(x) for every state x."""
        if self._proj is None:
            self._proj = [tuple(sorted(set(self.table[:, x].tolist()))) for x in range(self.size)]
        return self._proj

    @property
    def max_projection(self) -> int:
        return max(len(p) for p in self.full_projection)

    def spec(self) -> Dict[str, Any]:
        return {"family": self.name, "params": dict(self.params)}

    def apply(self, f: int, x: int) -> int:
        self._check_member(f)
        self.space.check(x)
        return int(self.table[f, x])

    def iterate(self, f: int, x0: int, t: int) -> int:
        if t < 0:
            raise SpecError("t must be nonnegative")
        self._check_member(f)
        x = self.space.check(x0)
        row = self.table[f]
        for _ in range(t):
            x = int(row[x])
        return x

    def flow(self, f: int, x0: int, T: int) -> List[int]:
        out = []
        x = x0
        row = self.table[f]
        for _ in range(T):
            x = int(row[x])
            out.append(x)
        return out

    def _check_member(self, f: int) -> None:
        if not (0 <= f < self.member_count):
            raise SpecError(f"member index {f} out of range [0, {self.member_count})")

    def version(self, members: Optional[Iterable[int]] = None) -> "VersionSpace":
        if members is None:
            return VersionSpace(self, self.full_mask)
        mask = 0
        for f in members:
            self._check_member(f)
            mask |= 1 << f
        return VersionSpace(self, mask)

    def format_state(self, x: int) -> str:
        return self.space.format(x)

    def parse_state(self, text: str) -> int:
        return self.space.parse(text)

    # comparators -----------------------------------------------------------

    def markovian_losses(self, stream: "Stream") -> np.ndarray:
        if stream.T == 0:
            return np.zeros(self.member_count, dtype=np.int64)
        prev = np.asarray((stream.x0,) + stream.states[:-1], dtype=np.int64)
        nxt = np.asarray(stream.states, dtype=np.int64)
        return (self.table[:, prev] != nxt).sum(axis=1)

    def flow_losses(self, stream: "Stream") -> np.ndarray:
        loss = np.zeros(self.member_count, dtype=np.int64)
        cur = np.full(self.member_count, stream.x0, dtype=np.int64)
        rows = np.arange(self.member_count)
        for x in stream.states:
            cur = self.table[rows, cur]
            loss += cur != x
        return loss

    def markovian_comparator(self, stream: "Stream") -> Tuple[int, int]:
        self._check_stream(stream)
        losses = self.markovian_losses(stream)
        best = int(np.argmin(losses))
        return int(losses[best]), best

    def flow_comparator(self, stream: "Stream") -> Tuple[int, int]:
        self._check_stream(stream)
        losses = self.flow_losses(stream)
        best = int(np.argmin(losses))
        return int(losses[best]), best

    def is_realizable(self, stream: "Stream") -> Tuple[bool, "VersionSpace"]:
        self._check_stream(stream)
        mask = self.full_mask
        prev = stream.x0
        masks = self.masks
        for x in stream.states:
            mask &= masks[prev][x]
            if not mask:
                break
            prev = x
        return bool(mask), VersionSpace(self, mask)

    def _check_stream(self, stream: "Stream") -> None:
        self.space.check(stream.x0)
        for x in stream.states:
            self.space.check(x)


class ImplicitFamily:
    """A family known only through oracles. Subclasses declare capabilities."""

    enumerated = False
    capabilities: frozenset = frozenset()
    name = "implicit"
    params: Dict[str, Any] = {}

    def apply(self, member: Any, x: Any) -> Any:
        raise NotImplementedError

    def iterate(self, member: Any, x0: Any, t: int) -> Any:
        if t < 0:
            raise SpecError("t must be nonnegative")
        x = x0
        for _ in range(t):
            x = self.apply(member, x)
        return x

    def flow(self, member: Any, x0: Any, T: int) -> List[Any]:
        out = []
        x = x0
        for _ in range(T):
            x = self.apply(member, x)
            out.append(x)
        return out

    def spec(self) -> Dict[str, Any]:
        return {"family": self.name, "params": dict(self.params)}

    def format_state(self, x: Any) -> str:
        return str(x)

    def parse_state(self, text: str) -> Any:
        raise CapabilityError(f"{self.name} cannot parse states")

    def markovian_comparator(self, stream: "Stream") -> Tuple[int, Any]:
        raise CapabilityError(f"{self.name} has no Markovian comparator")

    def flow_comparator(self, stream: "Stream") -> Tuple[int, Any]:
        raise CapabilityError(f"{self.name} has no flow comparator")

    def is_realizable(self, stream: "Stream") -> Tuple[bool, Any]:
        raise CapabilityError(f"{self.name} cannot decide realizability")

    def sample_member(self, rng: np.random.Generator) -> Any:
        raise CapabilityError(f"{self.name} cannot sample members")


# ---------------------------------------------------------------------------
# version spaces and streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VersionSpace:
    family: EvolutionFamily
    mask: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask > self.family.full_mask:
            raise SpecError("version mask has bits outside the family")

    def __len__(self) -> int:
        return self.mask.bit_count()

    def is_empty(self) -> bool:
        return self.mask == 0

    def members(self) -> List[int]:
        out = []
        m = self.mask
        while m:
            low = m & -m
            out.append(low.bit_length() - 1)
            m ^= low
        return out

    def projection(self, x: int) -> List[int]:
        row = self.family.masks[self.family.space.check(x)]
        return [y for y in self.family.full_projection[x] if row[y] & self.mask]

    def restrict(self, x_prev: int, x_next: int) -> "VersionSpace":
        self.family.space.check(x_prev)
        self.family.space.check(x_next)
        return VersionSpace(self.family, self.mask & self.family.masks[x_prev][x_next])


@dataclass(frozen=True)
class Stream:
    x0: Any
    states: Tuple[Any, ...]

    def __init__(self, x0: Any, states: Iterable[Any]):
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "states", tuple(states))

    @property
    def T(self) -> int:
        return len(self.states)

    def prefix(self, t: int) -> "Stream":
        return Stream(self.x0, self.states[:t])

    def pairs(self) -> List[Tuple[Any, Any]]:
        prev = (self.x0,) + self.states[:-1]
        return list(zip(prev, self.states))


# ---------------------------------------------------------------------------
# functional API
# ---------------------------------------------------------------------------


def apply(family: Any, f: Any, x: Any) -> Any:
    return family.apply(f, x)


def iterate(family: Any, f: Any, x0: Any, t: int) -> Any:
    return family.iterate(f, x0, t)


def projection(family: EvolutionFamily, version: Optional[VersionSpace], x: int) -> List[int]:
    if version is None:
        version = family.version()
    return version.projection(x)


def consistent_subset(version: VersionSpace, x_prev: int, x_next: int) -> VersionSpace:
    return version.restrict(x_prev, x_next)


def is_realizable(stream: Stream, family: Any) -> Tuple[bool, Any]:
    return family.is_realizable(stream)


def markovian_comparator(stream: Stream, family: Any) -> Tuple[int, Any]:
    if "markovian_comparator" not in family.capabilities:
        raise CapabilityError(f"{family.name} has no Markovian comparator")
    return family.markovian_comparator(stream)


def flow_comparator(stream: Stream, family: Any) -> Tuple[int, Any]:
    if "flow_comparator" not in family.capabilities:
        raise CapabilityError(f"{family.name} has no flow comparator")
    return family.flow_comparator(stream)


def require_enumerated(family: Any, what: str = "this operation") -> EvolutionFamily:
    if not getattr(family, "enumerated", False):
        raise CapabilityError(f"{what} needs an enumerated family, got {getattr(family, 'name', family)!r}")
    return family
