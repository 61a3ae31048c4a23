import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approvalpne.errors import ContractError
from approvalpne.instance_io import load_fixture
from approvalpne.model import (
    Comparison,
    ElectionInstance,
    VoterProfile,
    ideal_set,
    ideal_union,
    is_full_rank,
    j_star,
    owa_utility,
    prefers,
    social_welfare,
)

from conftest import cases
from oracles import utility as oracle_utility

A, B, C, D = range(4)


def single_voter(owa, m=4):
    voter = VoterProfile.from_ranking(range(m), owa)
    return ElectionInstance(len(owa), (voter,), tuple(range(m)))


@pytest.mark.parametrize(
    "owa, committee, expected",
    [
        ((1, 0), {A, B}, 4),
        ((0, 1), {C, D}, 1),
        ((0, 1), {B, D}, 1),
        ((0, 1), {A, D}, 1),
        ((1, 1), {A, B}, 7),
    ],
)
def test_owa_utility_set_extensions(owa, committee, expected):
    assert owa_utility(single_voter(owa), 0, committee) == expected


def test_owa_utility_contract_errors():
    inst = single_voter((1, 0))
    with pytest.raises(ContractError, match="size"):
        owa_utility(inst, 0, {A})
    with pytest.raises(ContractError, match="unknown candidate"):
        owa_utility(inst, 0, {A, 9})
    with pytest.raises(ContractError):
        owa_utility(inst, 3, {A, B})


@pytest.mark.parametrize("owa, expected", [((1, 0, 0), 1), ((1, 1, 1), 3), ((1, 0, 2), 3), ((0, 0, 5), 3)])
def test_j_star(owa, expected):
    assert j_star(owa) == expected


def test_j_star_rejects_degenerate_vectors():
    with pytest.raises(ContractError):
        j_star((0, 0))
    with pytest.raises(ContractError):
        j_star((1, -1))


@pytest.mark.parametrize("owa, expected", [((1, 1), True), ((0, 1), False), ((1, 0), True), ((2, 0, 1), False)])
def test_is_full_rank(owa, expected):
    assert is_full_rank(owa) is expected


def test_ideal_sets_on_fixture():
    inst = load_fixture("ex2")
    assert ideal_set(inst, 0) == {A}
    assert ideal_set(inst, 1) == {C, D}
    assert ideal_union(inst) == {A, C, D}


def test_ideal_union_trivial_cases():
    inst = single_voter((1, 1, 1, 1))
    assert ideal_set(inst, 0) == set(range(4))
    voter = VoterProfile.from_ranking((2, 0, 1), (1, 1))
    same = ElectionInstance(2, (voter,) * 3, (0, 1, 2))
    assert ideal_union(same) == ideal_set(same, 0) == {2, 0}


def test_prefers():
    inst = single_voter((0, 1))
    assert prefers(inst, 0, {A, D}, {C, D}) is Comparison.INDIFFERENT
    assert prefers(inst, 0, {A, B}, {A, B}) is Comparison.INDIFFERENT
    best = single_voter((1, 0))
    assert prefers(best, 0, {A, D}, {B, C}) is Comparison.PREFERS
    assert prefers(best, 0, {B, C}, {A, D}) is Comparison.DISPREFERS


@settings(max_examples=200, deadline=None)
@given(cases(m_max=5, n_max=2))
def test_ideal_set_committee_beats_any_committee_missing_it(case):
    instance, _, _ = case
    for i, voter in enumerate(instance.voters):
        ideal = ideal_set(instance, i)
        for w in itertools.combinations(range(instance.m), instance.k):
            w = frozenset(w)
            if ideal <= w:
                for w2 in itertools.combinations(range(instance.m), instance.k):
                    if not ideal <= set(w2):
                        assert owa_utility(instance, i, w) > owa_utility(instance, i, w2)


@settings(max_examples=200, deadline=None)
@given(cases(m_max=6, n_max=3), st.data())
def test_owa_utility_matches_definition(case, data):
    instance, _, _ = case
    committee = data.draw(st.sets(st.integers(0, instance.m - 1), min_size=instance.k, max_size=instance.k))
    for i in range(instance.n):
        assert owa_utility(instance, i, committee) == oracle_utility(instance, i, frozenset(committee))
    assert social_welfare(instance, committee) == sum(oracle_utility(instance, i, frozenset(committee)) for i in range(instance.n))


def test_voter_validation():
    with pytest.raises(ContractError, match="distinct"):
        VoterProfile((0, 1), (1, 1), (1,))
    with pytest.raises(ContractError, match="disagrees"):
        VoterProfile((0, 1), (1, 2), (1,))
    with pytest.raises(ContractError, match="permutation"):
        VoterProfile((0, 0), (2, 1), (1,))
    with pytest.raises(ContractError, match="float"):
        VoterProfile((0, 1), (2.0, 1), (1,))
    with pytest.raises(ContractError):
        VoterProfile((0, 1), (2, 1), (0,))


def test_instance_validation():
    voter = VoterProfile.from_ranking((0, 1, 2), (1, 0))
    with pytest.raises(ContractError):
        ElectionInstance(2, (voter,), (0, 1))
    with pytest.raises(ContractError):
        ElectionInstance(3, (voter,), (0, 1, 2))
    with pytest.raises(ContractError):
        ElectionInstance(2, (), (0, 1, 2))
    inst = ElectionInstance(2, (voter,), (2, 0, 1))
    assert inst.priority_rank == (1, 2, 0)
    assert inst.label({2, 0}) == "{a,c}"


def test_utilities_are_exact_fractions():
    voter = VoterProfile.from_ranking((0, 1), (Fraction(1, 3),), ("7/2", 1))
    assert voter.utility == (Fraction(7, 2), Fraction(1))
