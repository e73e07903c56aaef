"""JSON/CSV formats and schema validation for configs and specs."""

from __future__ import annotations

import csv
import io as _io
import json
from typing import Any, Dict, List, Optional, Sequence

import jsonschema

from evolab.core import EvolutionFamily, SpecError, StateSpace, Stream, parse_label

FAMILY_SPEC_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "family": {"type": "string"},
        "params": {"type": "object"},
    },
    "required": ["family"],
    "additionalProperties": False,
}

LEARNER_SPEC_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "learner": {"type": "string"},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["learner"],
    "additionalProperties": False,
}

ADVERSARY_SPEC_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "adversary": {"type": "string"},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["adversary"],
    "additionalProperties": False,
}

EXPERIMENT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "family": FAMILY_SPEC_SCHEMA,
        "learner": LEARNER_SPEC_SCHEMA,
        "adversary": ADVERSARY_SPEC_SCHEMA,
        "stream_file": {"type": "string"},
        "T": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "metric": {"enum": ["mistakes", "markovian", "flow"]},
        "workers": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "csv": {"type": "string"},
    },
    "required": ["family", "learner"],
    "oneOf": [{"required": ["adversary"]}, {"required": ["stream_file"]}],
    "additionalProperties": False,
}


def validate(data: Any, schema: Dict[str, Any], what: str = "document") -> Any:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"invalid {what} at {path}: {exc.message}") from None
    return data


def dumps(obj: Any) -> str:
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# streams
# ---------------------------------------------------------------------------


def stream_to_csv(stream: Stream, family: Any, seed: Optional[int] = None) -> str:
    buf = _io.StringIO()
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "state"])
    w.writerow([0, family.format_state(stream.x0)])
    for t, x in enumerate(stream.states, start=1):
        w.writerow([t, family.format_state(x)])
    return buf.getvalue()


def stream_from_csv(text: str, family: Any) -> Stream:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or [c.strip() for c in rows[0]] != ["t", "state"]:
        raise SpecError("stream CSV must start with the header 't,state'")
    states = []
    for i, row in enumerate(rows[1:]):
        if len(row) != 2:
            raise SpecError(f"stream CSV row {i + 2} must have 2 columns")
        try:
            t = int(row[0])
        except ValueError:
            raise SpecError(f"stream CSV row {i + 2}: bad round index {row[0]!r}") from None
        if t != i:
            raise SpecError(f"stream CSV rounds must be 0, 1, 2, ...; got {t} at row {i + 2}")
        states.append(family.parse_state(row[1]))
    if not states:
        raise SpecError("stream CSV has no x0 row")
    return Stream(states[0], states[1:])


# ---------------------------------------------------------------------------
# family tables
# ---------------------------------------------------------------------------


def family_to_csv(family: EvolutionFamily) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["member", "state", "next_state"])
    fmt = family.format_state
    for f, row in enumerate(family.table.tolist()):
        for x, y in enumerate(row):
            w.writerow([f, fmt(x), fmt(y)])
    return buf.getvalue()


def family_from_csv(text: str, kind: str = "index", name: str = "table") -> EvolutionFamily:
    """Rebuild a family from its table CSV; member 0's rows fix the state order."""
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != ["member", "state", "next_state"]:
        raise SpecError("family CSV must start with the header 'member,state,next_state'")
    body = rows[1:]
    labels: List[Any] = []
    for r in body:
        if r[0].strip() != "0":
            break
        labels.append(parse_label(kind, r[1]))
    if kind == "index" and labels != list(range(len(labels))):
        raise SpecError("index-coded states must be listed as 0..n-1")
    space = StateSpace(len(labels), kind, labels)
    members: Dict[int, List[Optional[int]]] = {}
    for i, r in enumerate(body):
        if len(r) != 3:
            raise SpecError(f"family CSV row {i + 2} must have 3 columns")
        f = int(r[0])
        row = members.setdefault(f, [None] * space.size)
        row[space.parse(r[1])] = space.parse(r[2])
    if sorted(members) != list(range(len(members))):
        raise SpecError("member indices must be 0..m-1")
    table = []
    for f in range(len(members)):
        if any(v is None for v in members[f]):
            raise SpecError(f"member {f} is missing states")
        table.append(members[f])
    return EvolutionFamily(name, space, table, {})


def tree_to_json(tree: Any) -> str:
    return dumps(tree.to_dict())
