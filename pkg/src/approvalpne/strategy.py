"""Best responses, minimal best responses and ballot-length restrictions.

A voter's ballot is scanned against fixed ballots of everyone else. Because
rules see only approval counts, the other voters enter as a count vector.
Scans run on integer kernels: each voter's utilities and OWA weights are
scaled by the product of their denominators, which keeps comparisons exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import kernels
from .errors import CapacityError, ContractError, InvariantViolation
from .model import ElectionInstance
from .rules import RuleSpec, approval_counts, canonical_profile

DEFAULT_BRUTE_FORCE_CAP = 12


def mask_of(ballot) -> int:
    mask = 0
    for c in ballot:
        mask |= 1 << c
    return mask


def set_of(mask: int) -> frozenset:
    out = []
    c = 0
    while mask:
        if mask & 1:
            out.append(c)
        mask >>= 1
        c += 1
    return frozenset(out)


def popcount(mask: int) -> int:
    return mask.bit_count()


def effective_limit(restriction: Optional[int], m: int) -> int:
    """``None`` or any ``R >= m`` means unrestricted."""
    if restriction is None:
        return m
    if restriction < 0:
        raise ContractError(f"ballot-length restriction must be >= 0, got {restriction}")
    return min(restriction, m)


class BallotScanner:
    """Exhaustive single-voter ballot scans for one (instance, rule) pair.

    Results are cached per ``(voter, others_counts, limit)``, which makes
    repeated verification inside profile enumerations cheap.
    """

    def __init__(self, instance: ElectionInstance, rule: RuleSpec, cap: int = DEFAULT_BRUTE_FORCE_CAP):
        rule.check_instance(instance)
        if instance.m > cap:
            raise CapacityError(f"m={instance.m} exceeds the brute-force cap of {cap} candidates")
        self.instance = instance
        self.rule = rule
        self.m = instance.m
        self.prio_rank = instance.priority_rank
        self._voters = [self._scale_voter(v) for v in instance.voters]
        self._cache = {}
        self._generic = not rule.kernel_compatible
        if not self._generic:
            self.weights = rule.integer_weights(self.m)
            key_bound = (instance.n * max(self.weights) + 1) * self.m
            util_bound = max(sum(abs(w) for w in v[1]) * max(abs(u) for u in v[0]) for v in self._voters)
            native = self.m <= 62 and kernels.fits_int64(key_bound, util_bound)
            self._kern = kernels.active if native else kernels.pure

    @staticmethod
    def _scale_voter(voter):
        du = math.lcm(*(u.denominator for u in voter.utility))
        dw = math.lcm(*(w.denominator for w in voter.owa))
        util = tuple(int(u * du) for u in voter.utility)
        owa = tuple(int(w * dw) for w in voter.owa[: voter.j_star])
        return util, owa, voter.preference, du * dw

    def to_fraction(self, voter: int, value: int) -> Fraction:
        return Fraction(value, self._voters[voter][3])

    def committee(self, counts: Sequence[int]) -> int:
        if self._generic:
            return mask_of(self.rule.elect_from_counts(self.instance, counts))
        return self._kern.elect_mask(counts, self.weights, self.prio_rank, self.instance.k)

    def utility_int(self, voter: int, committee_mask: int) -> int:
        util, owa, pref, _ = self._voters[voter]
        return kernels.pure.committee_utility(committee_mask, util, owa, pref)

    def ballot_utility(self, voter: int, others_counts: Sequence[int], ballot_mask: int) -> int:
        counts = [s + (ballot_mask >> c & 1) for c, s in enumerate(others_counts)]
        return self.utility_int(voter, self.committee(counts))

    def table(self, voter: int, others_counts: Sequence[int], limit: Optional[int] = None) -> Sequence[int]:
        """Scaled utility of every ballot mask; masks longer than ``limit`` hold ``INVALID``."""
        others_counts = tuple(others_counts)
        limit = self.m if limit is None else limit
        key = (voter, others_counts, limit)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        util, owa, pref, _ = self._voters[voter]
        if self._generic:
            out = [kernels.INVALID] * (1 << self.m)
            for b in range(1 << self.m):
                if popcount(b) <= limit:
                    out[b] = self.ballot_utility(voter, others_counts, b)
        else:
            out = self._kern.scan_ballots(
                others_counts, self.weights, self.prio_rank, self.instance.k, util, owa, pref, limit
            )
        self._cache[key] = out
        return out

    def accept_table(self, voter: int, max_count: int, base: int, kind: int, sincere_bits: int = 0):
        """Accepted-ballot bitsets for every others-count vector (see ``_pykernels.accept_table``).

        Returns ``None`` for rules that bypass the kernels.
        """
        if self._generic:
            return None
        util, owa, pref, _ = self._voters[voter]
        return self._kern.accept_table(
            max_count, base, self.weights, self.prio_rank, self.instance.k, util, owa, pref, kind, sincere_bits
        )

    def summary(self, voter: int, others_counts: Sequence[int], limit: Optional[int] = None):
        """``(table, best scaled utility, smallest BR size)`` for one scan."""
        others_counts = tuple(others_counts)
        key = ("summary", voter, others_counts, limit)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        table = self.table(voter, others_counts, limit)
        best = max(table)
        size = min(popcount(b) for b, u in enumerate(table) if u == best)
        out = (table, best, size)
        self._cache[key] = out
        return out


def others_counts_of(instance: ElectionInstance, voter_index: int, others) -> tuple:
    """Approval counts of everyone but ``voter_index``.

    ``others`` is either the ``n - 1`` ballots of the other voters in index
    order, or a full profile whose entry ``voter_index`` is ignored.
    """
    if not 0 <= voter_index < instance.n:
        raise ContractError(f"voter index {voter_index} out of range")
    others = [frozenset(b) for b in others]
    if len(others) == instance.n:
        others = others[:voter_index] + others[voter_index + 1 :]
    elif len(others) != instance.n - 1:
        raise ContractError(f"expected {instance.n - 1} other ballots, got {len(others)}")
    for ballot in others:
        for c in ballot:
            if not (isinstance(c, int) and 0 <= c < instance.m):
                raise ContractError(f"unknown candidate {c!r} in others' ballots")
    return approval_counts(instance.m, others)


def priority_key(instance: ElectionInstance, ballot) -> tuple:
    """Sort key making the lexicographically least ballot under the priority order first."""
    return (len(ballot), tuple(sorted(instance.priority_rank[c] for c in ballot)))


@dataclass(frozen=True)
class BestResponseReport:
    achievable_utility: Fraction
    br_ballots: frozenset
    mbr_size: int
    mbr_ballots: frozenset
    restriction: Optional[int] = None
    restricted_utility: Optional[Fraction] = None
    restricted_br_ballots: Optional[frozenset] = None
    restricted_mbr_size: Optional[int] = None

    @property
    def constrained(self) -> bool:
        """True when no ballot within the restriction is a best response."""
        return self.restricted_utility is not None and self.restricted_utility < self.achievable_utility


def _report_from_table(scanner, voter, table, restriction, limit) -> BestResponseReport:
    best = max(table)
    br = [b for b, u in enumerate(table) if u == best]
    size = min(popcount(b) for b in br)
    mbr = [b for b in br if popcount(b) == size]
    fields = dict(
        achievable_utility=scanner.to_fraction(voter, best),
        br_ballots=frozenset(set_of(b) for b in br),
        mbr_size=size,
        mbr_ballots=frozenset(set_of(b) for b in mbr),
    )
    if restriction is not None:
        valid = [(b, u) for b, u in enumerate(table) if popcount(b) <= limit]
        rbest = max(u for _, u in valid)
        rbr = [b for b, u in valid if u == rbest]
        fields.update(
            restriction=restriction,
            restricted_utility=scanner.to_fraction(voter, rbest),
            restricted_br_ballots=frozenset(set_of(b) for b in rbr),
            restricted_mbr_size=min(popcount(b) for b in rbr),
        )
    return BestResponseReport(**fields)


def brute_force_best_responses(
    instance: ElectionInstance,
    rule: RuleSpec,
    voter_index: int,
    others,
    restriction: Optional[int] = None,
    *,
    cap: int = DEFAULT_BRUTE_FORCE_CAP,
) -> BestResponseReport:
    """Scan all ``2^m`` ballots; also report the optimum within ``|A_i| <= R`` if given."""
    counts = others_counts_of(instance, voter_index, others)
    limit = effective_limit(restriction, instance.m)
    scanner = BallotScanner(instance, rule, cap)
    table = scanner.table(voter_index, counts)
    return _report_from_table(scanner, voter_index, table, restriction, limit)


def minimal_best_response(
    instance: ElectionInstance,
    rule: RuleSpec,
    voter_index: int,
    others,
    restriction: Optional[int] = None,
    *,
    cap: int = DEFAULT_BRUTE_FORCE_CAP,
) -> tuple:
    """``(size, ballot)`` for the canonical MBR.

    Under a restriction only valid ballots compete. Ties among equally short
    best responses go to the lexicographically least ballot under the priority
    order.
    """
    report = brute_force_best_responses(instance, rule, voter_index, others, restriction, cap=cap)
    if restriction is None:
        pool, size = report.mbr_ballots, report.mbr_size
    else:
        size = report.restricted_mbr_size
        pool = [b for b in report.restricted_br_ballots if len(b) == size]
    return size, min(pool, key=lambda b: priority_key(instance, b))


def is_sincere(instance: ElectionInstance, voter_index: int, ballot) -> bool:
    """True iff the ballot is a top segment of the voter's ranking (``{}`` and ``C`` included)."""
    ballot = frozenset(ballot)
    pref = instance.voters[voter_index].preference
    return ballot == frozenset(pref[: len(ballot)])


def sincere_ballots(instance: ElectionInstance, voter_index: int) -> list:
    pref = instance.voters[voter_index].preference
    return [frozenset(pref[:length]) for length in range(instance.m + 1)]


@dataclass(frozen=True)
class SincereResponse:
    ballot: frozenset
    utility: Fraction
    optimal: bool  # attains the unrestricted best-response utility


def sincere_best_response(
    instance: ElectionInstance,
    rule: RuleSpec,
    voter_index: int,
    others,
    restriction: Optional[int] = None,
) -> SincereResponse:
    """Best of the ``m + 1`` sincere ballots, shortest first among ties.

    For a non-degenerate rule some sincere ballot is a best response, so the
    best prefix over all lengths is the unrestricted optimum; ``optimal``
    reports whether a prefix of length ``<= R`` reaches it.
    """
    counts = others_counts_of(instance, voter_index, others)
    limit = effective_limit(restriction, instance.m)
    scanner = BallotScanner(instance, rule, cap=64)
    values = [scanner.ballot_utility(voter_index, counts, mask_of(b)) for b in sincere_ballots(instance, voter_index)]
    best_any = max(values)
    best_valid = max(values[: limit + 1])
    length = values.index(best_valid)
    pref = instance.voters[voter_index].preference
    return SincereResponse(frozenset(pref[:length]), scanner.to_fraction(voter_index, best_valid), best_valid == best_any)


def sincere_completion(
    instance: ElectionInstance,
    rule: RuleSpec,
    voter_index: int,
    others,
    mbr_ballot,
) -> frozenset:
    """Extend a best-response ballot to a sincere one without losing utility.

    Candidates preferred to the ballot's least-preferred member are added
    best-first; the utility is re-checked after each addition and a drop
    raises :class:`InvariantViolation` (the rule is not monotonically robust).
    """
    counts = others_counts_of(instance, voter_index, others)
    scanner = BallotScanner(instance, rule)
    current = frozenset(mbr_ballot)
    _, best, _ = scanner.summary(voter_index, counts)
    start = scanner.ballot_utility(voter_index, counts, mask_of(current))
    if start != best:
        raise ContractError("sincere_completion needs a best-response ballot as its starting point")
    if not current:
        return current
    voter = instance.voters[voter_index]
    last = max(voter.rank[c] for c in current)
    for c in voter.preference[:last]:
        if c in current:
            continue
        current = current | {c}
        value = scanner.ballot_utility(voter_index, counts, mask_of(current))
        if value != best:
            raise InvariantViolation(
                f"adding candidate {instance.names[c]} moved voter {voter_index}'s utility from "
                f"{scanner.to_fraction(voter_index, best)} to {scanner.to_fraction(voter_index, value)}"
            )
    return current


# ---------------------------------------------------------------------------
# ballot-length restrictions


@dataclass(frozen=True)
class ConstrainingWitness:
    """Others' ballots under a given priority where every valid ballot loses utility."""

    priority: tuple
    others: tuple
    unrestricted_utility: Fraction
    restricted_utility: Fraction

    @property
    def gap(self) -> Fraction:
        return self.unrestricted_utility - self.restricted_utility


@dataclass(frozen=True)
class ConstrainingResult:
    witness: Optional[ConstrainingWitness]
    exhaustive: bool  # True only if a failed search covered every others-profile
    priorities_examined: tuple

    @property
    def found(self) -> bool:
        return self.witness is not None


def canonical_constraining_priority(instance: ElectionInstance, voter_index: int) -> tuple:
    """Instance priority with the voter's ideal set moved to the bottom."""
    voter = instance.voters[voter_index]
    top = set(voter.preference[: voter.j_star])
    rest = [c for c in instance.priority if c not in top]
    return tuple(rest + [c for c in instance.priority if c in top])


def _gap_for(scanner, voter, counts, limit):
    table = scanner.table(voter, counts)
    best = max(table)
    rbest = max(u for b, u in enumerate(table) if popcount(b) <= limit)
    return best, rbest


def constraining_witness(
    instance: ElectionInstance,
    rule: RuleSpec,
    voter_index: int,
    restriction: int,
    search_budget: int = 100_000,
    *,
    mode: str = "synthesize",
) -> ConstrainingResult:
    """Search for others' ballots that push every best response above length ``R``.

    ``mode="synthesize"`` first tries all-empty others under a priority that
    ranks the voter's ideal set last, then searches profiles under the
    instance's own priority. ``mode="fixed"`` only does the profile search.
    Profiles are enumerated as count vectors of the ``n - 1`` other voters.
    """
    m, n = instance.m, instance.n
    if restriction is None or restriction >= m:
        raise ContractError("constraining_witness needs a restriction R < m")
    limit = effective_limit(restriction, m)
    if mode not in ("synthesize", "fixed"):
        raise ContractError(f"unknown mode {mode!r}")
    examined = []
    if mode == "synthesize":
        prio = canonical_constraining_priority(instance, voter_index)
        examined.append(prio)
        scanner = BallotScanner(instance.with_priority(prio), rule)
        zero = (0,) * m
        best, rbest = _gap_for(scanner, voter_index, zero, limit)
        if best > rbest:
            return ConstrainingResult(
                ConstrainingWitness(
                    prio,
                    canonical_profile(zero, n - 1),
                    scanner.to_fraction(voter_index, best),
                    scanner.to_fraction(voter_index, rbest),
                ),
                False,
                tuple(examined),
            )
    examined.append(instance.priority)
    scanner = BallotScanner(instance, rule)
    spent = 0
    for counts in itertools.product(range(n), repeat=m):
        if spent >= search_budget:
            return ConstrainingResult(None, False, tuple(examined))
        spent += 1
        best, rbest = _gap_for(scanner, voter_index, counts, limit)
        if best > rbest:
            return ConstrainingResult(
                ConstrainingWitness(
                    instance.priority,
                    canonical_profile(counts, n - 1),
                    scanner.to_fraction(voter_index, best),
                    scanner.to_fraction(voter_index, rbest),
                ),
                False,
                tuple(examined),
            )
    return ConstrainingResult(None, True, tuple(examined))
