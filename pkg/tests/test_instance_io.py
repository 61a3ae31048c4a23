import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approvalpne.errors import ParseError
from approvalpne.generate import ExperimentConfig, generate_instance
from approvalpne.instance_io import (
    FIXTURES,
    dumps,
    fixture_path,
    format_rational,
    load_fixture,
    load_instance,
    loads,
    save_instance,
)
from approvalpne.model import ElectionInstance, VoterProfile

from conftest import random_instance

GOOD = """\
approvalpne-instance 1
size m=3 n=2 k=1
priority a b c
voter a>b>c | a=3 b=2 c=1 | 1
voter c>b>a | a=1/2 b=2/3 c=7 | 1
"""


def test_ex1_fixture_content():
    inst = load_fixture("ex1")
    assert (inst.m, inst.n, inst.k) == (3, 3, 1)
    assert inst.names == ("a", "b", "c")
    assert inst.priority == (0, 1, 2)
    for v in inst.voters:
        assert v.preference == (1, 0, 2)
        assert v.owa == (1,)


def test_ex2_fixture_content():
    inst = load_fixture("ex2")
    assert (inst.m, inst.n, inst.k) == (4, 3, 2)
    assert inst.priority == (1, 0, 2, 3)
    v1, v2, v3 = inst.voters
    assert v1.preference == (0, 1, 2, 3) and v1.owa == (1, 0)
    assert v2 == v3 and v2.preference == (2, 3, 0, 1) and v2.owa == (1, 1)
    assert load_fixture("ex2_abcd").voters == inst.voters
    assert load_fixture("ex2_abcd").priority == (0, 1, 2, 3)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_round_trip_from_raw_file(name):
    text = fixture_path(name).read_text(encoding="utf-8")
    inst = loads(text)
    assert loads(dumps(inst)) == inst


def test_round_trip_thousand_random_instances():
    rng = random.Random(2024)
    for t in range(1000):
        m = rng.randint(1, 8)
        inst = random_instance(rng, m, rng.randint(1, 6))
        assert loads(dumps(inst)) == inst, t


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**63 - 1), st.sampled_from(["borda-like", "random-rational"]))
def test_generated_instances_round_trip(seed, scheme):
    config = ExperimentConfig(m=(1, 7), n=(1, 5), k=(1, 3), utility_scheme=scheme, owa_scheme="random-any")
    inst = generate_instance(config, seed)
    assert dumps(loads(dumps(inst))) == dumps(inst)


def test_save_and_load(tmp_path):
    inst = loads(GOOD)
    path = tmp_path / "x.inst"
    save_instance(inst, path)
    assert load_instance(path) == inst
    assert inst.voters[1].utility == (Fraction(1, 2), Fraction(2, 3), Fraction(7))


def test_comments_blank_lines_and_custom_names():
    text = "# header comment\n\napprovalpne-instance 1  # trailing\nsize k=1 n=1 m=2\ncandidates x y\npriority y x\nvoter x>y | x=2 y=1 | 1\n"
    inst = loads(text)
    assert inst.names == ("x", "y") and inst.priority == (1, 0)


@pytest.mark.parametrize(
    "mutate, line, message",
    [
        (lambda s: s.replace("a=1/2", "a=0.5"), 5, "malformed rational"),
        (lambda s: s.replace("a=1/2", "a=1/0"), 5, "zero denominator"),
        (lambda s: s.replace("b=2/3", "b=7"), 5, "duplicate utility"),
        (lambda s: s.replace("priority a b c", "priority a b b"), 3, "repeated in priority"),
        (lambda s: s.replace("priority a b c", "priority a b"), 3, "must list all"),
        (lambda s: s.replace("voter a>b>c", "voter a>c>c"), 4, "repeated in ranking"),
        (lambda s: s.replace("| 1\nvoter c", "| 1 0\nvoter c"), 4, "OWA weights"),
        (lambda s: s.replace("| 1\nvoter c", "| 0\nvoter c"), 4, "positive weight"),
        (lambda s: s.replace("c=7", "d=7"), 5, "bad utility entry"),
        (lambda s: s.replace("size m=3 n=2 k=1", "size m=3 n=2 k=4"), 2, "infeasible size"),
        (lambda s: s + "frobnicate\n", 6, "unknown directive"),
        (lambda s: s.replace("voter a>b>c | a=3 b=2 c=1", "voter a>b>c | a=1 b=2 c=3"), 4, "disagrees"),
    ],
)
def test_parse_errors_carry_position(mutate, line, message):
    with pytest.raises(ParseError, match=message) as info:
        loads(mutate(GOOD))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_column_points_at_bad_token():
    bad = GOOD.replace("a=1/2", "a=x")
    with pytest.raises(ParseError) as info:
        loads(bad)
    assert info.value.column == bad.splitlines()[4].index("x") + 1


def test_voter_count_mismatch_and_header():
    with pytest.raises(ParseError, match="n=2"):
        loads(GOOD.rsplit("voter", 1)[0])
    with pytest.raises(ParseError, match="header"):
        loads(GOOD.replace("approvalpne-instance 1", "instance 1"))
    with pytest.raises(ParseError, match="version"):
        loads(GOOD.replace("approvalpne-instance 1", "approvalpne-instance 2"))
    with pytest.raises(ParseError):
        loads("")


@pytest.mark.parametrize("value, text", [(Fraction(7, 2), "7/2"), (Fraction(3), "3"), (Fraction(-1, 3), "-1/3")])
def test_format_rational(value, text):
    assert format_rational(value) == text


def test_large_candidate_sets_use_generated_names():
    v = VoterProfile.from_ranking(range(30), (1,))
    inst = ElectionInstance(1, (v,), tuple(range(30)))
    assert loads(dumps(inst)) == inst
    assert inst.names[27] == "c27"
