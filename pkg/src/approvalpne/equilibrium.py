"""Pure Nash equilibria of approval elections: plain, lazy and sincere.

``plain``   every ballot is a best response.
``lazy``    every ballot is a minimal best response (no shorter ballot does as well).
``sincere`` every ballot is a best response and a top segment of the voter's ranking.

The structural checkers below (dichotomy, containment, sigma condition, the
single-winner characterisation) assume the standard AV rule with lexicographic
tie-breaking.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import kernels
from .errors import CapacityError, ContractError, InvariantViolation, PreconditionError
from .model import ElectionInstance, ideal_set, ideal_union, social_welfare
from .rules import STANDARD_AV, RuleSpec, approval_counts
from .strategy import BallotScanner, is_sincere, mask_of, popcount, priority_key, set_of

DEFAULT_PROFILE_CAP = 1 << 24


class EquilibriumKind(str, enum.Enum):
    PLAIN = "plain"
    LAZY = "lazy"
    SINCERE = "sincere"


_CONDITION = {
    EquilibriumKind.PLAIN: "utility-maximal",
    EquilibriumKind.LAZY: "mbr",
    EquilibriumKind.SINCERE: "sincere-br",
}


@dataclass(frozen=True)
class VoterEvidence:
    voter: int
    condition: str
    utility: Fraction
    ballot_size: int


@dataclass(frozen=True)
class EquilibriumCertificate:
    committee: frozenset
    profile: tuple
    kind: EquilibriumKind
    evidence: tuple

    @property
    def profile_masks(self) -> tuple:
        return tuple(mask_of(b) for b in self.profile)


@dataclass(frozen=True)
class DeviationWitness:
    """A voter and a ballot they would rather submit.

    ``tag`` is ``improving`` (strictly higher utility), ``shorter-br-exists``
    (same utility with fewer approvals) or ``sincere-br-exists`` (a sincere
    ballot with the same utility).
    """

    voter: int
    ballot: frozenset
    alternate: frozenset
    old_utility: Fraction
    new_utility: Fraction
    tag: str

    def replay(self, instance: ElectionInstance, rule: RuleSpec, profile) -> bool:
        """Re-elect with both ballots and confirm the recorded utilities and tag."""
        from .model import owa_utility
        from .rules import elect

        profile = tuple(frozenset(b) for b in profile)
        if profile[self.voter] != self.ballot:
            return False
        swapped = profile[: self.voter] + (self.alternate,) + profile[self.voter + 1 :]
        old = owa_utility(instance, self.voter, elect(rule, instance, profile))
        new = owa_utility(instance, self.voter, elect(rule, instance, swapped))
        if (old, new) != (self.old_utility, self.new_utility):
            return False
        if self.tag == "improving":
            return new > old
        if self.tag == "shorter-br-exists":
            return new == old and len(self.alternate) < len(self.ballot)
        if self.tag == "sincere-br-exists":
            return new == old and is_sincere(instance, self.voter, self.alternate)
        return False


def _kind(kind) -> EquilibriumKind:
    try:
        return EquilibriumKind(kind)
    except ValueError:
        raise ContractError(f"unknown equilibrium kind {kind!r}") from None


class _Verifier:
    """Per-voter acceptance test shared by verification and enumeration."""

    def __init__(self, instance: ElectionInstance, rule: RuleSpec, kind: EquilibriumKind):
        self.instance = instance
        self.rule = rule
        self.kind = kind
        self.scanner = BallotScanner(instance, rule)
        self.sincere_masks = [
            frozenset(mask_of(v.preference[:length]) for length in range(instance.m + 1)) for v in instance.voters
        ]
        self._accept = {}

    def accepted(self, voter: int, others_counts: tuple) -> frozenset:
        """All ballot masks satisfying this kind's condition against ``others_counts``."""
        key = (voter, others_counts)
        hit = self._accept.get(key)
        if hit is not None:
            return hit
        table, best, size = self.scanner.summary(voter, others_counts)
        ok = [b for b, u in enumerate(table) if u == best]
        if self.kind is EquilibriumKind.LAZY:
            ok = [b for b in ok if popcount(b) == size]
        elif self.kind is EquilibriumKind.SINCERE:
            ok = [b for b in ok if b in self.sincere_masks[voter]]
        out = frozenset(ok)
        self._accept[key] = out
        return out

    def witness(self, voter: int, others_counts: tuple, own: int) -> Optional[DeviationWitness]:
        table, best, size = self.scanner.summary(voter, others_counts)
        value = table[own]
        to_f = self.scanner.to_fraction
        inst = self.instance

        def pick(masks):
            return min((set_of(b) for b in masks), key=lambda s: priority_key(inst, s))

        if value < best:
            alt = pick(b for b, u in enumerate(table) if u == best and popcount(b) == size)
            return DeviationWitness(voter, set_of(own), alt, to_f(voter, value), to_f(voter, best), "improving")
        if self.kind is EquilibriumKind.LAZY and popcount(own) > size:
            alt = pick(b for b, u in enumerate(table) if u == best and popcount(b) == size)
            return DeviationWitness(voter, set_of(own), alt, to_f(voter, value), to_f(voter, best), "shorter-br-exists")
        if self.kind is EquilibriumKind.SINCERE and own not in self.sincere_masks[voter]:
            sincere = [b for b in sorted(self.sincere_masks[voter], key=popcount) if table[b] == best]
            if not sincere:
                raise InvariantViolation(f"no sincere best response for voter {voter}; rule is not non-degenerate")
            alt = set_of(sincere[0])
            return DeviationWitness(voter, set_of(own), alt, to_f(voter, value), to_f(voter, best), "sincere-br-exists")
        return None

    def certificate(self, masks: tuple) -> EquilibriumCertificate:
        inst = self.instance
        counts = approval_counts(inst.m, [set_of(b) for b in masks])
        committee = set_of(self.scanner.committee(counts))
        evidence = []
        for i, own in enumerate(masks):
            others = tuple(s - (own >> c & 1) for c, s in enumerate(counts))
            _, best, _ = self.scanner.summary(i, others)
            evidence.append(VoterEvidence(i, _CONDITION[self.kind], self.scanner.to_fraction(i, best), popcount(own)))
        return EquilibriumCertificate(committee, tuple(set_of(b) for b in masks), self.kind, tuple(evidence))


def verify_equilibrium(instance: ElectionInstance, rule: RuleSpec, profile, kind="plain"):
    """Certificate if ``profile`` is an equilibrium of ``kind``, else the first
    :class:`DeviationWitness` found (lowest voter index)."""
    kind = _kind(kind)
    profile = tuple(frozenset(b) for b in profile)
    if len(profile) != instance.n:
        raise ContractError(f"profile has {len(profile)} ballots, expected n={instance.n}")
    verifier = _Verifier(instance, rule, kind)
    masks = tuple(mask_of(b) for b in profile)
    counts = approval_counts(instance.m, profile)
    for i, own in enumerate(masks):
        others = tuple(s - (own >> c & 1) for c, s in enumerate(counts))
        found = verifier.witness(i, others, own)
        if found is not None:
            return found
    return verifier.certificate(masks)


@dataclass(frozen=True)
class EnumerationResult:
    kind: EquilibriumKind
    certificates: tuple
    profiles_examined: int

    @property
    def committees(self) -> frozenset:
        return frozenset(c.committee for c in self.certificates)

    @property
    def exists(self) -> bool:
        return bool(self.certificates)

    def by_committee(self) -> dict:
        out = {}
        for cert in self.certificates:
            out.setdefault(cert.committee, []).append(cert)
        return out


def lazy_score_facts(instance: ElectionInstance, certificate: EquilibriumCertificate) -> bool:
    """Zero approvals outside the committee and at most one inside it."""
    counts = approval_counts(instance.m, certificate.profile)
    return all(
        (counts[c] <= 1) if c in certificate.committee else (counts[c] == 0) for c in range(instance.m)
    )


def _assert_score_facts(instance, certs):
    for cert in certs:
        if not lazy_score_facts(instance, cert):
            raise InvariantViolation(f"lazy certificate with profile {cert.profile} breaks the score facts")


_BITSET_MAX_M = 6  # accepted-ballot sets must fit a 64-bit word
_KIND_CODE = {EquilibriumKind.PLAIN: 0, EquilibriumKind.LAZY: 1, EquilibriumKind.SINCERE: 2}


def _filter_profiles(verifier, code, m, n):
    """Tabulate every voter's accepted ballots against every others-count vector,
    then run the profile loop in the kernel."""
    base = n + 1
    ncodes = base**m
    kind_code = _KIND_CODE[verifier.kind]
    accept = []
    for i in range(n):
        sincere_bits = sum(1 << b for b in verifier.sincere_masks[i])
        table = verifier.scanner.accept_table(i, n - 1, base, kind_code, sincere_bits)
        if table is None:
            table = [0] * ncodes
            for counts in itertools.product(range(n), repeat=m):
                x = sum(s * base**c for c, s in enumerate(counts))
                table[x] = sum(1 << b for b in verifier.accepted(i, counts))
        accept.extend(table)
    return kernels.active.profile_filter(accept, code, n, ncodes)


def _filter_profiles_generic(verifier, code, m, n):
    base = n + 1
    decoded = {}

    def counts_of(x):
        hit = decoded.get(x)
        if hit is None:
            hit = decoded[x] = tuple((x // base**c) % base for c in range(m))
        return hit

    found = []
    for masks in itertools.product(range(1 << m), repeat=n):
        total_code = sum(code[b] for b in masks)
        for i, own in enumerate(masks):
            if own not in verifier.accepted(i, counts_of(total_code - code[own])):
                break
        else:
            found.append(verifier.certificate(masks))
    return found


def enumerate_equilibria(instance: ElectionInstance, rule: RuleSpec, kind="plain", *, cap: int = DEFAULT_PROFILE_CAP):
    """Verify every one of the ``(2^m)^n`` profiles."""
    kind = _kind(kind)
    m, n = instance.m, instance.n
    total = 1 << (m * n)
    if total > cap:
        hint = " (use enumerate_lazy_pruned for lazy equilibria)" if kind is EquilibriumKind.LAZY else ""
        raise CapacityError(f"{total} profiles exceed the cap of {cap}{hint}")
    verifier = _Verifier(instance, rule, kind)
    base = n + 1
    # count vectors packed base n+1; sums never carry since every count <= n
    code = [sum((b >> c & 1) * base**c for c in range(m)) for b in range(1 << m)]
    if m <= _BITSET_MAX_M:
        found = [verifier.certificate(masks) for masks in _filter_profiles(verifier, code, m, n)]
    else:
        found = _filter_profiles_generic(verifier, code, m, n)
    if kind is EquilibriumKind.LAZY:
        _assert_score_facts(instance, found)
    return EnumerationResult(kind, tuple(found), total)


def _lazy_candidate_profiles(m: int, n: int, k: int):
    """Profiles where at most ``k`` candidates get exactly one approval each."""
    for size in range(min(k, m) + 1):
        for chosen in itertools.combinations(range(m), size):
            for owners in itertools.product(range(n), repeat=size):
                masks = [0] * n
                for c, i in zip(chosen, owners):
                    masks[i] |= 1 << c
                yield tuple(masks)


def enumerate_lazy_pruned(instance: ElectionInstance, rule: RuleSpec) -> EnumerationResult:
    """Lazy equilibria, searching only profiles that can satisfy the lazy score facts.

    Every surviving profile is verified by full best-response scans. The
    result matches :func:`enumerate_equilibria` with ``kind="lazy"``.
    """
    if rule.kind != STANDARD_AV or not rule.kernel_compatible:
        raise PreconditionError("the pruned lazy enumerator is only valid for the standard AV rule")
    verifier = _Verifier(instance, rule, EquilibriumKind.LAZY)
    m, n = instance.m, instance.n
    tables = None
    if m <= _BITSET_MAX_M:
        # candidate profiles approve each candidate at most once, so the others'
        # counts are a 0/1 vector: base 2, indexed by the union of their ballots
        tables = [verifier.scanner.accept_table(i, 1, 2, _KIND_CODE[EquilibriumKind.LAZY]) for i in range(n)]
        if any(t is None for t in tables):
            tables = None
    found = []
    examined = 0
    for masks in _lazy_candidate_profiles(m, n, instance.k):
        examined += 1
        union = 0
        for b in masks:
            union |= b
        for i, own in enumerate(masks):
            if tables is not None:
                ok = tables[i][union ^ own] >> own & 1
            else:
                others = tuple((union ^ own) >> c & 1 for c in range(m))
                ok = own in verifier.accepted(i, others)
            if not ok:
                break
        else:
            found.append(verifier.certificate(masks))
    found.sort(key=lambda cert: cert.profile_masks)
    _assert_score_facts(instance, found)
    return EnumerationResult(EquilibriumKind.LAZY, tuple(found), examined)


# ---------------------------------------------------------------------------
# structure of lazy equilibria


class Dichotomy(str, enum.Enum):
    CONTAINS_IDEAL = "contains-ideal"
    INSIDE_IDEAL = "inside-ideal"
    VIOLATION = "violation"


def _require_full_rank(instance: ElectionInstance):
    bad = [i for i, v in enumerate(instance.voters) if not v.full_rank]
    if bad:
        raise PreconditionError(
            f"voters {bad} are not full-rank; the lazy-equilibrium structure results assume full rank"
        )


def _require_lazy(certificate):
    if certificate.kind is not EquilibriumKind.LAZY:
        raise PreconditionError("expected a lazy-equilibrium certificate")


def classify_lazy_dichotomy(instance: ElectionInstance, certificate: EquilibriumCertificate) -> Dichotomy:
    _require_lazy(certificate)
    _require_full_rank(instance)
    ideal = ideal_union(instance)
    w = certificate.committee
    if ideal <= w:
        return Dichotomy.CONTAINS_IDEAL
    if w < ideal:
        return Dichotomy.INSIDE_IDEAL
    return Dichotomy.VIOLATION


def containment_condition(instance: ElectionInstance, committee) -> bool:
    """Every non-ideal member out-prioritises every candidate left out."""
    rank = instance.priority_rank
    ideal = ideal_union(instance)
    extra = [rank[c] for c in committee if c not in ideal]
    outside = [rank[c] for c in range(instance.m) if c not in committee]
    return not extra or not outside or max(extra) < min(outside)


@dataclass(frozen=True)
class ConstructionFailure:
    reason: str
    witness: Optional[DeviationWitness] = None

    def __bool__(self):
        return False


def construct_containment_pne(instance: ElectionInstance, rule: RuleSpec):
    """Lazy equilibrium whose committee contains every voter's ideal set.

    The committee is the ideal union padded with the highest-priority
    outsiders. Ideal members are visited from lowest priority upwards; each
    one that the zero-approval tie-break would not already seat receives a
    single approval from a voter whose ideal set contains it.
    """
    ideal = ideal_union(instance)
    k = instance.k
    if len(ideal) > k:
        raise PreconditionError(
            f"|W*|={len(ideal)} exceeds k={k}; no committee contains it (use enumerate_lazy_pruned)"
        )
    rank = instance.priority_rank
    pad = [c for c in instance.priority if c not in ideal][: k - len(ideal)]
    target = ideal | frozenset(pad)
    ballots = [set() for _ in range(instance.n)]
    assigned = 0
    for c in sorted(ideal, key=rank.__getitem__, reverse=True):
        if rank[c] + 1 <= k - assigned:
            break
        voter = next(i for i in range(instance.n) if c in ideal_set(instance, i))
        ballots[voter].add(c)
        assigned += 1
    profile = tuple(frozenset(b) for b in ballots)
    result = verify_equilibrium(instance, rule, profile, EquilibriumKind.LAZY)
    if isinstance(result, DeviationWitness):
        return ConstructionFailure(
            f"voter {result.voter} deviates from the constructed profile ({result.tag})", result
        )
    if result.committee != target:
        return ConstructionFailure(
            f"constructed profile elects {instance.label(result.committee)}, expected {instance.label(target)}"
        )
    return result


@dataclass(frozen=True)
class SigmaCheck:
    passed: bool
    lowest_winner_rank: int  # 1-based priority position of the lowest-priority winner
    violations: tuple  # (voter, unelected candidate) pairs breaking the unanimity clause

    def __bool__(self):
        return self.passed


def check_sigma_condition(instance: ElectionInstance, certificate: EquilibriumCertificate) -> SigmaCheck:
    """Necessary conditions for a lazy equilibrium strictly inside the ideal union.

    (a) the lowest-priority winner sits below priority position ``k``;
    (b) every voter who counts that winner among their top ``j*`` committee
        members ranks it above every unelected candidate of higher priority.
    """
    _require_lazy(certificate)
    _require_full_rank(instance)
    w = certificate.committee
    if not w < ideal_union(instance):
        raise PreconditionError("the sigma condition applies only to committees strictly inside W*")
    rank = instance.priority_rank
    last = max(w, key=rank.__getitem__)
    sigma_k = rank[last] + 1
    higher_out = [c for c in range(instance.m) if c not in w and rank[c] < rank[last]]
    violations = []
    for i, voter in enumerate(instance.voters):
        top = voter.sort_desc(w)[: voter.j_star]
        if last not in top:
            continue
        violations.extend((i, c) for c in higher_out if not voter.prefers(last, c))
    passed = sigma_k > instance.k and not violations
    return SigmaCheck(passed, sigma_k, tuple(violations))


def k1_characterization(instance: ElectionInstance, rule: Optional[RuleSpec] = None) -> frozenset:
    """Single-winner lazy equilibria predicted from rankings and priority alone.

    ``{c}`` qualifies if ``c`` tops every ranking, or if ``c`` tops some
    ranking, is not first in priority, and every voter ranks it above every
    higher-priority candidate.
    """
    if instance.k != 1:
        raise PreconditionError(f"the single-winner characterisation needs k=1, got k={instance.k}")
    if rule is not None and rule.kind != STANDARD_AV:
        raise PreconditionError("the single-winner characterisation assumes the standard AV rule")
    tops = {v.preference[0] for v in instance.voters}
    out = set()
    for j, c in enumerate(instance.priority):
        if tops == {c}:
            out.add(frozenset({c}))
        elif j > 0 and c in tops and all(
            v.prefers(c, d) for v in instance.voters for d in instance.priority[:j]
        ):
            out.add(frozenset({c}))
    return frozenset(out)


def construct_sincere_pne(instance: ElectionInstance, rule: RuleSpec, *, nonempty: bool = False):
    """Sincere equilibrium in which every winner has at least two approvals.

    Each of ``k`` rounds picks a remaining candidate that at least two voters
    rank first among the remaining ones (most supporters, then priority).
    Those supporters approve their whole ranking down to that candidate;
    everything above it was picked in earlier rounds, so the ballot stays
    sincere and only winners are approved. With ``nonempty`` every abstaining
    voter approves all candidates instead.
    """
    m, n = instance.m, instance.n
    if n <= m:
        raise PreconditionError(f"sincere-equilibrium construction needs n > m (n={n}, m={m})")
    if rule.kind != STANDARD_AV or not rule.kernel_compatible:
        raise PreconditionError("sincere-equilibrium construction assumes the standard AV rule")
    rank = instance.priority_rank
    remaining = set(range(m))
    ballots = [frozenset()] * n
    for _ in range(instance.k):
        support = {}
        for i, v in enumerate(instance.voters):
            first = next(c for c in v.preference if c in remaining)
            support.setdefault(first, []).append(i)
        pick = min(support, key=lambda c: (-len(support[c]), rank[c]))
        if len(support[pick]) < 2:
            raise InvariantViolation("pigeonhole failed: no remaining candidate has two supporters")
        for i in support[pick]:
            v = instance.voters[i]
            ballots[i] = frozenset(v.preference[: v.rank[pick] + 1])
        remaining.discard(pick)
    if nonempty:
        ballots = [b or frozenset(range(m)) for b in ballots]
    result = verify_equilibrium(instance, rule, tuple(ballots), EquilibriumKind.SINCERE)
    if isinstance(result, DeviationWitness):
        raise InvariantViolation(f"constructed sincere profile is not an equilibrium: {result}")
    return result


def welfare(instance: ElectionInstance, certificate: EquilibriumCertificate) -> Fraction:
    """Sum of voter utilities; assumes utilities are comparable across voters."""
    return social_welfare(instance, certificate.committee)
