import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approvalpne.equilibrium import (
    ConstructionFailure,
    DeviationWitness,
    Dichotomy,
    EquilibriumCertificate,
    EquilibriumKind,
    check_sigma_condition,
    classify_lazy_dichotomy,
    construct_containment_pne,
    construct_sincere_pne,
    containment_condition,
    enumerate_equilibria,
    enumerate_lazy_pruned,
    k1_characterization,
    lazy_score_facts,
    verify_equilibrium,
    welfare,
)
from approvalpne.errors import CapacityError, PreconditionError
from approvalpne.instance_io import load_fixture
from approvalpne.model import ElectionInstance, VoterProfile, ideal_union
from approvalpne.rules import approval_counts, standard_av
from approvalpne.strategy import is_sincere

import oracles
from conftest import cases, random_instance

AV = standard_av()
a, b, c, d = range(4)
E = frozenset()
KINDS = ("plain", "lazy", "sincere")


def fs(*sets):
    return tuple(frozenset(x) for x in sets)


def test_ex1_plain_but_not_lazy():
    inst = load_fixture("ex1")
    profile = fs({c}, {c}, {c})
    cert = verify_equilibrium(inst, AV, profile, "plain")
    assert isinstance(cert, EquilibriumCertificate)
    assert cert.committee == {c}
    witness = verify_equilibrium(inst, AV, profile, "lazy")
    assert isinstance(witness, DeviationWitness)
    assert witness.tag == "shorter-br-exists"
    assert witness.alternate == E and witness.old_utility == witness.new_utility
    assert witness.replay(inst, AV, profile)


def test_ex2_sincere_and_unique_lazy():
    inst = load_fixture("ex2")
    cert = verify_equilibrium(inst, AV, fs({a, b}, E, E), "sincere")
    assert isinstance(cert, EquilibriumCertificate) and cert.committee == {a, b}
    lazy = enumerate_equilibria(inst, AV, "lazy")
    assert lazy.committees == {frozenset({a, c})}
    # frozen: voter 1 approves a, and exactly one of voters 2 and 3 approves c
    assert [x.profile for x in lazy.certificates] == [fs({a}, E, {c}), fs({a}, {c}, E)]
    assert enumerate_lazy_pruned(inst, AV).certificates == lazy.certificates
    assert welfare(inst, lazy.certificates[0]) == 16 > welfare(inst, cert) == 10


def test_ex2_other_priority_has_no_lazy_equilibrium():
    inst = load_fixture("ex2_abcd")
    assert not enumerate_equilibria(inst, AV, "lazy").exists
    assert not enumerate_lazy_pruned(inst, AV).exists


def test_k1_nonexistence_fixture():
    inst = load_fixture("k1_nonexistence")
    assert not enumerate_equilibria(inst, AV, "lazy").exists
    assert k1_characterization(inst, AV) == frozenset()
    # plain equilibria still exist, e.g. everybody approving a
    assert isinstance(verify_equilibrium(inst, AV, fs({a}, {a}, {a}), "plain"), EquilibriumCertificate)


def test_all_empty_profile_is_lazy_when_ideal_sets_sit_in_priority_top_k():
    v1 = VoterProfile.from_ranking((a, c, b, d), (1, 0))
    v2 = VoterProfile.from_ranking((b, a, d, c), (1, 1))
    inst = ElectionInstance(2, (v1, v2), (b, a, c, d))
    cert = verify_equilibrium(inst, AV, fs(E, E), "lazy")
    assert isinstance(cert, EquilibriumCertificate) and cert.committee == {a, b}
    built = construct_containment_pne(inst, AV)
    assert built.profile == fs(E, E)


def test_witness_kinds_and_replay():
    inst = load_fixture("ex2")
    profile = fs({d}, E, E)
    w = verify_equilibrium(inst, AV, profile, "plain")
    assert w.tag == "improving" and w.voter == 0 and w.new_utility > w.old_utility
    assert w.replay(inst, AV, profile)
    bad = DeviationWitness(w.voter, w.ballot, w.alternate, w.old_utility, w.new_utility + 1, w.tag)
    assert not bad.replay(inst, AV, profile)
    # sincere: voter 1's {a,c} is a BR against ({c},{}) yet skips b
    s = verify_equilibrium(inst, AV, fs({a, c}, {c}, E), "sincere")
    assert isinstance(s, DeviationWitness)
    assert s.replay(inst, AV, fs({a, c}, {c}, E))


def test_capacity_error_points_to_pruned_enumerator():
    rng = random.Random(0)
    inst = random_instance(rng, 5, 5, 2)
    with pytest.raises(CapacityError, match="enumerate_lazy_pruned"):
        enumerate_equilibria(inst, AV, "lazy")
    assert enumerate_lazy_pruned(inst, AV).profiles_examined < 2**25


def test_classification_and_sigma_on_ex2():
    inst = load_fixture("ex2")
    cert = enumerate_lazy_pruned(inst, AV).certificates[0]
    assert ideal_union(inst) == {a, c, d}
    assert classify_lazy_dichotomy(inst, cert) is Dichotomy.INSIDE_IDEAL
    sigma = check_sigma_condition(inst, cert)
    assert sigma and sigma.lowest_winner_rank == 3 and sigma.violations == ()


def test_sigma_rejects_priority_top_k_inside_ideal():
    inst = load_fixture("ex2")  # priority b a c d; top-2 is {a,b}, not inside W*
    v = VoterProfile.from_ranking((a, b, c, d), (1, 1))
    w = VoterProfile.from_ranking((c, a, b, d), (1, 1))
    inst = ElectionInstance(2, (v, w), (a, b, c, d))
    fake = EquilibriumCertificate(frozenset({a, b}), fs({a}, E), EquilibriumKind.LAZY, ())
    assert not check_sigma_condition(inst, fake)


def test_unanimous_instance_contains_ideal():
    v = VoterProfile.from_ranking((c, d, a, b), (2, 1))
    inst = ElectionInstance(2, (v, v), (a, b, c, d))
    res = enumerate_lazy_pruned(inst, AV)
    assert res.exists
    for cert in res.certificates:
        assert classify_lazy_dichotomy(inst, cert) is Dichotomy.CONTAINS_IDEAL
        assert containment_condition(inst, cert.committee)


def test_structure_checks_refuse_non_full_rank():
    v = VoterProfile.from_ranking((a, b, c, d), (0, 1))
    inst = ElectionInstance(2, (v,), (a, b, c, d))
    cert = EquilibriumCertificate(frozenset({a, b}), fs(E), EquilibriumKind.LAZY, ())
    with pytest.raises(PreconditionError, match="full-rank"):
        classify_lazy_dichotomy(inst, cert)


def test_containment_construction_single_vote():
    # W* = {c} is outside priority top-1, so one approval is needed
    v = VoterProfile.from_ranking((c, a, b), (1,))
    inst = ElectionInstance(1, (v, v), (a, b, c))
    cert = construct_containment_pne(inst, AV)
    assert cert.committee == {c}
    assert sum(len(x) for x in cert.profile) == 1


def test_containment_construction_pads_by_priority():
    v1 = VoterProfile.from_ranking((d, a, b, c), (1, 0, 0))
    v2 = VoterProfile.from_ranking((c, d, a, b), (1, 0, 0))
    inst = ElectionInstance(3, (v1, v2), (b, a, d, c))
    cert = construct_containment_pne(inst, AV)
    assert cert.committee == {c, d, b}
    assert containment_condition(inst, cert.committee)


def test_containment_precondition():
    with pytest.raises(PreconditionError, match="enumerate_lazy_pruned"):
        construct_containment_pne(load_fixture("ex2"), AV)


def test_construction_failure_is_falsy():
    assert not ConstructionFailure("nope")


def test_k1_unanimous_top():
    v = VoterProfile.from_ranking((b, a, c), (1,))
    w = VoterProfile.from_ranking((b, c, a), (1,))
    inst = ElectionInstance(1, (v, w), (a, b, c))
    assert k1_characterization(inst) == {frozenset({b})}
    assert enumerate_equilibria(inst, AV, "lazy").committees == {frozenset({b})}


def test_k1_second_clause():
    # tops b and c under priority a b c; both rank their own top above a
    v = VoterProfile.from_ranking((b, c, a), (1,))
    w = VoterProfile.from_ranking((c, b, a), (1,))
    inst = ElectionInstance(1, (v, w), (a, b, c))
    predicted = k1_characterization(inst)
    assert predicted == enumerate_equilibria(inst, AV, "lazy").committees
    assert predicted == {frozenset({b})}


def test_k1_precondition():
    with pytest.raises(PreconditionError):
        k1_characterization(load_fixture("ex2"))


def test_sincere_construction_unanimous():
    v = VoterProfile.from_ranking((a, b), (1,))
    inst = ElectionInstance(1, (v, v, v), (b, a))
    cert = construct_sincere_pne(inst, AV)
    assert cert.committee == {a}
    assert approval_counts(2, cert.profile)[a] == 3


def test_sincere_construction_spread_preferences():
    # n = m + 1 with every candidate ranked first by someone
    m = 4
    voters = [VoterProfile.from_ranking([(s + j) % m for j in range(m)], (1, 1, 1)) for s in range(m)]
    voters.append(VoterProfile.from_ranking(range(m), (1, 0, 0)))
    inst = ElectionInstance(3, tuple(voters), (3, 2, 1, 0))
    cert = construct_sincere_pne(inst, AV)
    counts = approval_counts(m, cert.profile)
    assert all(counts[w] >= 2 for w in cert.committee)
    assert all(is_sincere(inst, i, x) for i, x in enumerate(cert.profile))


def test_sincere_construction_needs_more_voters_than_candidates():
    with pytest.raises(PreconditionError):
        construct_sincere_pne(load_fixture("ex2"), AV)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4))
def test_sincere_construction_property(seed, m):
    rng = random.Random(seed)
    inst = random_instance(rng, m, m + rng.randint(1, 3))
    for nonempty in (False, True):
        cert = construct_sincere_pne(inst, AV, nonempty=nonempty)
        assert oracles.is_equilibrium(inst, AV, cert.profile, "sincere")
        if nonempty:
            assert all(cert.profile)
        else:
            counts = approval_counts(m, cert.profile)
            assert all(counts[w] >= 2 for w in cert.committee)


# ---------------------------------------------------------------------------
# oracle equivalence


@settings(max_examples=40, deadline=None)
@given(cases(m_max=3, n_max=2))
def test_enumeration_matches_oracle(case):
    instance, rule, _ = case
    for kind in KINDS:
        mine = [cert.profile for cert in enumerate_equilibria(instance, rule, kind).certificates]
        assert sorted(mine, key=repr) == sorted(oracles.equilibria(instance, rule, kind), key=repr)


@settings(max_examples=300, deadline=None)
@given(cases(m_max=4, n_max=3), st.sampled_from(KINDS))
def test_verify_matches_oracle(case, kind):
    instance, rule, profile = case
    result = verify_equilibrium(instance, rule, profile, kind)
    expected = oracles.is_equilibrium(instance, rule, profile, kind)
    assert isinstance(result, EquilibriumCertificate) == expected
    if expected:
        assert result.committee == oracles.elect(instance, rule, profile)
    else:
        assert result.replay(instance, rule, profile)


@settings(max_examples=100, deadline=None)
@given(cases(m_max=4, n_max=3))
def test_pruned_matches_naive(case):
    instance, _, _ = case
    naive = enumerate_equilibria(instance, AV, "lazy")
    pruned = enumerate_lazy_pruned(instance, AV)
    assert naive.certificates == pruned.certificates
    assert all(lazy_score_facts(instance, x) for x in pruned.certificates)


@settings(max_examples=100, deadline=None)
@given(cases(m_max=4, n_max=3))
def test_certificates_replay_through_verify(case):
    instance, rule, _ = case
    for cert in enumerate_equilibria(instance, rule, "plain").certificates[:20]:
        again = verify_equilibrium(instance, rule, cert.profile, "plain")
        assert again == cert
