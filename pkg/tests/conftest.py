import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from approvalpne.model import ElectionInstance, VoterProfile
from approvalpne.rules import candidate_weighted, standard_av

sys.path.insert(0, str(Path(__file__).parent))

OWA_CHOICES = (Fraction(0), Fraction(1), Fraction(2), Fraction(1, 2))


def random_instance(rng, m, n, k=None, *, full_rank=False, borda=False):
    k = rng.randint(1, m) if k is None else k
    voters = []
    for _ in range(n):
        pref = list(range(m))
        rng.shuffle(pref)
        if borda:
            utils = None
        else:
            utils = sorted((Fraction(x, rng.randint(1, 3)) for x in rng.sample(range(1, 10 * m), m)), reverse=True)
            if len(set(utils)) < m:
                utils = None
        if full_rank:
            top = rng.randint(1, k)
            owa = [rng.choice(OWA_CHOICES[1:]) for _ in range(top)] + [0] * (k - top)
        else:
            owa = [rng.choice(OWA_CHOICES) for _ in range(k)]
            if not any(owa):
                owa[rng.randrange(k)] = 1
        voters.append(VoterProfile.from_ranking(pref, owa, utils))
    priority = list(range(m))
    rng.shuffle(priority)
    return ElectionInstance(k, tuple(voters), tuple(priority))


def random_rule(rng, m):
    if rng.random() < 0.5:
        return standard_av()
    return candidate_weighted([Fraction(rng.randint(1, 4), rng.randint(1, 3)) for _ in range(m)])


def random_profile(rng, m, n):
    return tuple(frozenset(c for c in range(m) if rng.random() < 0.4) for _ in range(n))


@st.composite
def cases(draw, m_max=4, n_max=3, full_rank=False):
    """(instance, rule, profile) drawn through a seeded generator."""
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(1, m_max))
    n = draw(st.integers(1, n_max))
    rng = random.Random(seed)
    instance = random_instance(rng, m, n, full_rank=full_rank)
    return instance, random_rule(rng, m), random_profile(rng, m, n)


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
