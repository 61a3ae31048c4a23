"""Election instances, strict preferences and OWA committee utilities.

Candidates are dense integer ids ``0 .. m-1``. Every numeric quantity is a
:class:`fractions.Fraction`; indifference between committees is decided by
exact equality, never by a tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .errors import ContractError

Committee = frozenset
Ballot = frozenset


def as_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise ContractError(f"refusing inexact float value {value!r}; pass an int, str or Fraction")
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ContractError(f"not a rational number: {value!r}") from exc


def _check_permutation(seq: Sequence[int], m: int, what: str) -> None:
    if sorted(seq) != list(range(m)):
        raise ContractError(f"{what} must be a permutation of 0..{m - 1}, got {list(seq)}")


def j_star(owa: Sequence) -> int:
    """Largest 1-based position carrying a positive OWA weight.

    >>> j_star((1, 0, 2))
    3
    """
    weights = [as_fraction(w) for w in owa]
    if any(w < 0 for w in weights):
        raise ContractError("OWA weights must be nonnegative")
    for pos in range(len(weights), 0, -1):
        if weights[pos - 1] > 0:
            return pos
    raise ContractError("OWA vector must contain at least one positive weight")


def is_full_rank(owa: Sequence) -> bool:
    """True iff every weight up to ``j_star(owa)`` is strictly positive."""
    top = j_star(owa)
    return all(as_fraction(w) > 0 for w in owa[:top])


@dataclass(frozen=True)
class VoterProfile:
    """One voter: strict ranking, per-candidate utility and OWA weights.

    ``preference`` lists candidate ids from most to least preferred and must
    agree with the descending order of ``utility`` (indexed by candidate id).
    """

    preference: tuple
    utility: tuple
    owa: tuple

    def __post_init__(self):
        object.__setattr__(self, "preference", tuple(int(c) for c in self.preference))
        object.__setattr__(self, "utility", tuple(as_fraction(u) for u in self.utility))
        object.__setattr__(self, "owa", tuple(as_fraction(w) for w in self.owa))
        m = len(self.utility)
        _check_permutation(self.preference, m, "preference")
        if len(set(self.utility)) != m:
            raise ContractError("utilities must be pairwise distinct (strict preferences)")
        by_value = tuple(sorted(range(m), key=lambda c: self.utility[c], reverse=True))
        if by_value != self.preference:
            raise ContractError(
                f"preference {list(self.preference)} disagrees with utility order {list(by_value)}"
            )
        if not self.owa:
            raise ContractError("OWA vector must be non-empty")
        j_star(self.owa)  # validates sign and non-degeneracy

    @cached_property
    def rank(self) -> tuple:
        """``rank[c]`` is the 0-based position of ``c`` in this voter's preference."""
        out = [0] * len(self.preference)
        for pos, c in enumerate(self.preference):
            out[c] = pos
        return tuple(out)

    @property
    def j_star(self) -> int:
        return j_star(self.owa)

    @property
    def full_rank(self) -> bool:
        return is_full_rank(self.owa)

    def prefers(self, c, d) -> bool:
        return self.utility[c] > self.utility[d]

    def sort_desc(self, candidates: Iterable[int]) -> list:
        return sorted(candidates, key=self.rank.__getitem__)

    @classmethod
    def from_ranking(cls, preference, owa, utilities=None):
        """Build a voter from a ranking, defaulting to Borda-like utilities ``m, m-1, .., 1``.

        ``utilities`` when given are listed in preference order (best first).
        """
        preference = tuple(preference)
        m = len(preference)
        if utilities is None:
            utilities = range(m, 0, -1)
        utilities = list(utilities)
        if len(utilities) != m:
            raise ContractError("need one utility per candidate")
        util = [None] * m
        for c, u in zip(preference, utilities):
            util[c] = u
        return cls(preference, tuple(util), tuple(owa))


@dataclass(frozen=True)
class ElectionInstance:
    """Voters, candidates, committee size and the tie-breaking priority.

    ``priority[0]`` is the candidate that wins every tie.
    """

    k: int
    voters: tuple
    priority: tuple
    names: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "voters", tuple(self.voters))
        object.__setattr__(self, "priority", tuple(int(c) for c in self.priority))
        if not self.voters:
            raise ContractError("an election needs at least one voter")
        m = len(self.voters[0].utility)
        for i, v in enumerate(self.voters):
            if len(v.utility) != m:
                raise ContractError(f"voter {i} ranks {len(v.utility)} candidates, expected {m}")
        if not 1 <= self.k <= m:
            raise ContractError(f"committee size k={self.k} must satisfy 1 <= k <= m={m}")
        for i, v in enumerate(self.voters):
            if len(v.owa) != self.k:
                raise ContractError(f"voter {i} has {len(v.owa)} OWA weights, expected k={self.k}")
        _check_permutation(self.priority, m, "priority")
        names = tuple(self.names) if self.names else default_names(m)
        if len(names) != m or len(set(names)) != m:
            raise ContractError("candidate names must be unique, one per candidate")
        object.__setattr__(self, "names", names)

    @property
    def m(self) -> int:
        return len(self.priority)

    @property
    def n(self) -> int:
        return len(self.voters)

    @cached_property
    def priority_rank(self) -> tuple:
        """``priority_rank[c]`` is the 0-based tie-break position of ``c``."""
        out = [0] * self.m
        for pos, c in enumerate(self.priority):
            out[c] = pos
        return tuple(out)

    def with_priority(self, priority) -> "ElectionInstance":
        return ElectionInstance(self.k, self.voters, tuple(priority), self.names)

    def label(self, candidates) -> str:
        """Render a candidate set in priority-independent id order, e.g. ``{a,c}``."""
        return "{" + ",".join(self.names[c] for c in sorted(candidates)) + "}"


def default_names(m: int) -> tuple:
    if m <= 26:
        return tuple("abcdefghijklmnopqrstuvwxyz"[:m])
    return tuple(f"c{c}" for c in range(m))


def _validate_committee(instance: ElectionInstance, committee) -> frozenset:
    committee = frozenset(committee)
    if len(committee) != instance.k:
        raise ContractError(f"committee {sorted(committee)} has size {len(committee)}, expected k={instance.k}")
    for c in committee:
        if not (isinstance(c, int) and 0 <= c < instance.m):
            raise ContractError(f"unknown candidate id {c!r}")
    return committee


def owa_utility(instance: ElectionInstance, voter_index: int, committee) -> Fraction:
    """Sum of ``owa[j] * u(c_j)`` over the committee sorted best-first by the voter."""
    if not 0 <= voter_index < instance.n:
        raise ContractError(f"voter index {voter_index} out of range")
    committee = _validate_committee(instance, committee)
    voter = instance.voters[voter_index]
    ordered = voter.sort_desc(committee)
    return sum((w * voter.utility[c] for w, c in zip(voter.owa, ordered)), Fraction(0))


def ideal_set(instance: ElectionInstance, voter_index: int) -> frozenset:
    """The voter's ``j*`` most-preferred candidates in the whole candidate set."""
    voter = instance.voters[voter_index]
    return frozenset(voter.preference[: voter.j_star])


def ideal_union(instance: ElectionInstance) -> frozenset:
    out = frozenset()
    for i in range(instance.n):
        out |= ideal_set(instance, i)
    return out


class Comparison(enum.Enum):
    PREFERS = "strictly-prefers"
    INDIFFERENT = "indifferent"
    DISPREFERS = "strictly-dispreferred"


def prefers(instance: ElectionInstance, voter_index: int, first, second) -> Comparison:
    a = owa_utility(instance, voter_index, first)
    b = owa_utility(instance, voter_index, second)
    if a > b:
        return Comparison.PREFERS
    if a < b:
        return Comparison.DISPREFERS
    return Comparison.INDIFFERENT


def social_welfare(instance: ElectionInstance, committee) -> Fraction:
    """Sum of all voters' utilities.

    Only meaningful when the caller treats utilities as comparable across voters.
    """
    return sum((owa_utility(instance, i, committee) for i in range(instance.n)), Fraction(0))
