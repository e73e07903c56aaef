from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import catalog as cat
from evolab import io
from evolab.core import SpecError, Stream
from strategies import small_families


def test_dumps_is_stable():
    assert io.dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_experiment_schema():
    good = {"family": {"family": "bool_mod2", "params": {"n": 2}}, "learner": {"learner": "alg1"}, "adversary": {"adversary": "boolean_forcing"}}
    io.validate(good, io.EXPERIMENT_SCHEMA)
    with pytest.raises(SpecError):
        io.validate({**good, "extra": 1}, io.EXPERIMENT_SCHEMA)
    with pytest.raises(SpecError):
        io.validate({**good, "stream_file": "s.csv"}, io.EXPERIMENT_SCHEMA)
    with pytest.raises(SpecError):
        io.validate({k: v for k, v in good.items() if k != "adversary"}, io.EXPERIMENT_SCHEMA)


def test_stream_csv_roundtrip_structured_states():
    fam = cat.separation(3, 9)
    s = Stream(("+-+", 0), [("+++", 1), ("+++", -2), ("-++", 3)])
    text = io.stream_to_csv(s, fam, seed=4)
    assert text.startswith("# seed=4\nt,state\n")
    back = io.stream_from_csv(text, fam)
    assert back.x0 == s.x0 and list(back.states) == list(s.states)


def test_stream_csv_errors():
    fam = cat.bool_mod2(2)
    with pytest.raises(SpecError):
        io.stream_from_csv("time,x\n0,00\n", fam)
    with pytest.raises(SpecError):
        io.stream_from_csv("t,state\n0,00\n2,01\n", fam)
    with pytest.raises(SpecError):
        io.stream_from_csv("t,state\n", fam)


@settings(max_examples=40, deadline=None)
@given(small_families())
def test_family_csv_roundtrip(fam):
    back = io.family_from_csv(io.family_to_csv(fam))
    assert back.table.tolist() == fam.table.tolist()


def test_family_csv_structured_labels():
    fam = cat.bool_mod2(2)
    back = io.family_from_csv(io.family_to_csv(fam), kind="bits")
    assert back.table.tolist() == fam.table.tolist()
    assert back.format_state(3) == fam.format_state(3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=12))
def test_stream_csv_roundtrip_property(xs):
    fam = cat.bool_mod2(2)
    s = Stream(xs[0], xs[1:])
    back = io.stream_from_csv(io.stream_to_csv(s, fam), fam)
    assert back.x0 == s.x0 and list(back.states) == list(s.states)
