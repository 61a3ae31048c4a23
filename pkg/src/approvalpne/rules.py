"""Non-degenerate best-k approval rules and their monotonicity checkers.

A rule scores each candidate from its approval count alone,
``f(c, A) = g(c, s(c, A))``, and elects the ``k`` best scores, resolving
ties by the instance's priority order.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import ContractError
from .model import ElectionInstance, VoterProfile, as_fraction

STANDARD_AV = "standard-av"
CANDIDATE_WEIGHTED = "candidate-weighted"


@dataclass(frozen=True)
class RuleSpec:
    """Standard AV (``g(c, s) = s``) or candidate-weighted AV (``g(c, s) = w(c) s``).

    Subclasses may override :meth:`score` or :meth:`elect_from_counts`; such
    rules are evaluated by the generic Python path instead of the kernels.
    """

    kind: str = STANDARD_AV
    weights: tuple = ()

    def __post_init__(self):
        if self.kind == STANDARD_AV:
            if self.weights:
                raise ContractError("standard AV takes no candidate weights")
        elif self.kind == CANDIDATE_WEIGHTED:
            weights = tuple(as_fraction(w) for w in self.weights)
            if not weights:
                raise ContractError("candidate-weighted rule needs one weight per candidate")
            if any(w <= 0 for w in weights):
                raise ContractError("candidate weights must be strictly positive")
            object.__setattr__(self, "weights", weights)
        else:
            raise ContractError(f"unknown rule kind {self.kind!r}")

    def check_instance(self, instance: ElectionInstance) -> None:
        if self.kind == CANDIDATE_WEIGHTED and len(self.weights) != instance.m:
            raise ContractError(f"rule has {len(self.weights)} weights but instance has m={instance.m}")

    def score(self, c: int, count: int) -> Fraction:
        if self.kind == STANDARD_AV:
            return Fraction(count)
        return self.weights[c] * count

    def elect_from_counts(self, instance: ElectionInstance, counts: Sequence[int]) -> frozenset:
        rank = instance.priority_rank
        order = sorted(range(instance.m), key=lambda c: (-self.score(c, counts[c]), rank[c]))
        return frozenset(order[: instance.k])

    @property
    def kernel_compatible(self) -> bool:
        cls = type(self)
        return cls.score is RuleSpec.score and cls.elect_from_counts is RuleSpec.elect_from_counts

    def integer_weights(self, m: int) -> tuple:
        """Weights scaled to positive integers; same candidate order as the rule."""
        if self.kind == STANDARD_AV:
            return (1,) * m
        scale = math.lcm(*(w.denominator for w in self.weights))
        return tuple(int(w * scale) for w in self.weights)


def standard_av() -> RuleSpec:
    return RuleSpec()


def candidate_weighted(weights) -> RuleSpec:
    return RuleSpec(CANDIDATE_WEIGHTED, tuple(weights))


def random_weighted_rule(m: int, rng: random.Random) -> RuleSpec:
    pool = [Fraction(1), Fraction(2), Fraction(3), Fraction(1, 2), Fraction(3, 2), Fraction(2, 3)]
    return candidate_weighted(rng.choice(pool) for _ in range(m))


@dataclass(frozen=True)
class ScoreTable:
    counts: tuple
    scores: tuple


def _check_profile(instance: ElectionInstance, profile) -> tuple:
    profile = tuple(frozenset(b) for b in profile)
    if len(profile) != instance.n:
        raise ContractError(f"profile has {len(profile)} ballots, expected n={instance.n}")
    for i, ballot in enumerate(profile):
        for c in ballot:
            if not (isinstance(c, int) and 0 <= c < instance.m):
                raise ContractError(f"ballot of voter {i} names unknown candidate {c!r}")
    return profile


def approval_counts(m: int, profile) -> tuple:
    counts = [0] * m
    for ballot in profile:
        for c in ballot:
            counts[c] += 1
    return tuple(counts)


def approval_scores(rule: RuleSpec, instance: ElectionInstance, profile) -> ScoreTable:
    profile = _check_profile(instance, profile)
    rule.check_instance(instance)
    counts = approval_counts(instance.m, profile)
    return ScoreTable(counts, tuple(rule.score(c, counts[c]) for c in range(instance.m)))


def elect(rule: RuleSpec, instance: ElectionInstance, profile) -> frozenset:
    """Winning committee of ``profile``: top ``k`` scores, ties to higher priority."""
    profile = _check_profile(instance, profile)
    rule.check_instance(instance)
    return rule.elect_from_counts(instance, approval_counts(instance.m, profile))


# ---------------------------------------------------------------------------
# monotonicity checkers


@dataclass(frozen=True)
class Counterexample:
    instance: ElectionInstance
    rule: RuleSpec
    candidate: int
    before: tuple
    after: tuple
    committee_before: frozenset
    committee_after: frozenset


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    trials: int
    counterexample: Optional[Counterexample] = None

    def __bool__(self):
        return self.passed


RuleArg = Union[RuleSpec, Callable[[int, random.Random], RuleSpec]]


def placeholder_instance(m: int, n: int, k: int, priority=None) -> ElectionInstance:
    """Instance whose voters are irrelevant; used where only m, n, k and priority matter."""
    voter = VoterProfile.from_ranking(range(m), (1,) * k)
    return ElectionInstance(k, (voter,) * n, tuple(priority) if priority is not None else tuple(range(m)))


def _random_instance(rng: random.Random, m_max: int, n_max: int) -> ElectionInstance:
    m = rng.randint(2, m_max)
    n = rng.randint(1, n_max)
    k = rng.randint(1, m)
    priority = list(range(m))
    rng.shuffle(priority)
    return placeholder_instance(m, n, k, priority)


def _resolve_rule(rule: RuleArg, m: int, rng: random.Random) -> RuleSpec:
    return rule if isinstance(rule, RuleSpec) else rule(m, rng)


def _random_profile(rng: random.Random, m: int, n: int) -> tuple:
    p = rng.random()
    return tuple(frozenset(c for c in range(m) if rng.random() < p) for _ in range(n))


def canonical_profile(counts: Sequence[int], n: int) -> tuple:
    """A profile realising ``counts``: voter ``j`` approves ``c`` iff ``j < counts[c]``."""
    return tuple(frozenset(c for c, s in enumerate(counts) if j < s) for j in range(n))


def _rrm_violation(rule, instance, a, a2, c) -> Optional[Counterexample]:
    w = rule.elect_from_counts(instance, approval_counts(instance.m, a))
    if c not in w:
        return None
    w2 = rule.elect_from_counts(instance, approval_counts(instance.m, a2))
    if c in w2:
        return None
    return Counterexample(instance, rule, c, a, a2, w, w2)


def _robust_violation(rule, instance, a, a2, c) -> Optional[Counterexample]:
    w = rule.elect_from_counts(instance, approval_counts(instance.m, a))
    w2 = rule.elect_from_counts(instance, approval_counts(instance.m, a2))
    if w2 == w:
        return None
    if c in w2 and c not in w and len(w - w2) == 1 and w2 - {c} <= w:
        return None
    return Counterexample(instance, rule, c, a, a2, w, w2)


def _exhaustive_instances(m_max: int, n_max: int):
    for m in range(1, m_max + 1):
        for n in range(1, n_max + 1):
            for k in range(1, m + 1):
                for priority in itertools.permutations(range(m)):
                    yield placeholder_instance(m, n, k, priority)


def check_relative_rank_monotonicity(
    rule: RuleArg,
    instance: Optional[ElectionInstance] = None,
    trials: int = 10_000,
    seed: int = 0,
    *,
    m_max: int = 6,
    n_max: int = 5,
) -> CheckResult:
    """Sample ``(A, c in W_A, A')`` with c's count weakly up and every other count
    weakly down, and require ``c`` to stay elected.

    With ``instance=None`` every trial draws a fresh instance shape.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    rng = random.Random(seed)
    for t in range(trials):
        inst = instance or _random_instance(rng, m_max, n_max)
        r = _resolve_rule(rule, inst.m, rng)
        a = _random_profile(rng, inst.m, inst.n)
        w = r.elect_from_counts(inst, approval_counts(inst.m, a))
        c = rng.choice(sorted(w))
        if rng.random() < 0.1:
            a2 = a
        else:
            a2 = []
            for ballot in a:
                kept = {d for d in ballot if d == c or rng.random() < 0.5}
                if rng.random() < 0.5:
                    kept.add(c)
                a2.append(frozenset(kept))
            a2 = tuple(a2)
        bad = _rrm_violation(r, inst, a, a2, c)
        if bad:
            return CheckResult(False, t + 1, bad)
    return CheckResult(True, trials)


def check_monotonic_robustness(
    rule: RuleArg,
    instance: Optional[ElectionInstance] = None,
    trials: int = 10_000,
    seed: int = 0,
    *,
    m_max: int = 6,
    n_max: int = 5,
) -> CheckResult:
    """Sample a profile and a single reinforcement of ``c``; the committee may only
    stay put or admit ``c`` in place of exactly one incumbent."""
    if trials < 1:
        raise ContractError("trials must be >= 1")
    rng = random.Random(seed)
    t = 0
    while t < trials:
        inst = instance or _random_instance(rng, m_max, n_max)
        r = _resolve_rule(rule, inst.m, rng)
        a = _random_profile(rng, inst.m, inst.n)
        slots = [(i, c) for i, b in enumerate(a) for c in range(inst.m) if c not in b]
        if not slots:
            continue
        i, c = rng.choice(slots)
        a2 = a[:i] + (a[i] | {c},) + a[i + 1 :]
        t += 1
        bad = _robust_violation(r, inst, a, a2, c)
        if bad:
            return CheckResult(False, t, bad)
    return CheckResult(True, trials)


def check_rrm_exhaustive(rule: RuleArg, m_max: int = 3, n_max: int = 3, seed: int = 0) -> CheckResult:
    """Every instance shape up to ``m_max, n_max`` (all priorities and k), every
    pair of count vectors satisfying the hypothesis and every winner ``c``.

    Rules see only approval counts, so count vectors stand in for profiles.
    """
    rng = random.Random(seed)
    checked = 0
    for inst in _exhaustive_instances(m_max, n_max):
        r = _resolve_rule(rule, inst.m, rng)
        vectors = list(itertools.product(range(inst.n + 1), repeat=inst.m))
        for before in vectors:
            w = r.elect_from_counts(inst, before)
            for c in w:
                for after in vectors:
                    if after[c] < before[c]:
                        continue
                    if any(after[d] > before[d] for d in range(inst.m) if d != c):
                        continue
                    checked += 1
                    w2 = r.elect_from_counts(inst, after)
                    if c not in w2:
                        a, a2 = canonical_profile(before, inst.n), canonical_profile(after, inst.n)
                        return CheckResult(False, checked, Counterexample(inst, r, c, a, a2, w, w2))
    return CheckResult(True, checked)


def check_robustness_exhaustive(rule: RuleArg, m_max: int = 3, n_max: int = 3, seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    checked = 0
    for inst in _exhaustive_instances(m_max, n_max):
        r = _resolve_rule(rule, inst.m, rng)
        for before in itertools.product(range(inst.n + 1), repeat=inst.m):
            for c in range(inst.m):
                if before[c] == inst.n:
                    continue
                after = before[:c] + (before[c] + 1,) + before[c + 1 :]
                checked += 1
                a, a2 = canonical_profile(before, inst.n), canonical_profile(after, inst.n)
                bad = _robust_violation(r, inst, a, a2, c)
                if bad:
                    return CheckResult(False, checked, bad)
    return CheckResult(True, checked)
