"""Line-oriented text format for election instances.

Example::

    # comments run to end of line
    approvalpne-instance 1
    size m=4 n=3 k=2
    candidates a b c d
    priority b a c d
    voter a>b>c>d | a=4 b=3 c=2 d=1 | 1 0
    voter c>d>a>b | a=2 b=1 c=4 d=3 | 1 1
    voter c>d>a>b | a=2 b=1 c=4 d=3 | 1 1

Numbers are exact rationals written ``p`` or ``p/q``; decimals are rejected.
A ``voter`` line holds the ranking (best first), one utility per candidate and
the ``k`` OWA weights. ``candidates`` may be omitted, in which case names
default to ``a, b, c, ...``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import ContractError, ParseError
from .model import ElectionInstance, VoterProfile, default_names

MAGIC = "approvalpne-instance"
VERSION = "1"
_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _rational(token: str, line: int, col: int) -> Fraction:
    if not _RATIONAL.match(token):
        raise ParseError(f"malformed rational {token!r} (expected p or p/q)", line, col)
    try:
        return Fraction(token)
    except ZeroDivisionError:
        raise ParseError(f"zero denominator in {token!r}", line, col) from None


def _tokens(text: str):
    """Yield ``(token, column)`` pairs; columns are 1-based."""
    for match in re.finditer(r"\S+", text):
        yield match.group(), match.start() + 1


def dumps(instance: ElectionInstance) -> str:
    names = instance.names
    lines = [
        f"{MAGIC} {VERSION}",
        f"size m={instance.m} n={instance.n} k={instance.k}",
        "candidates " + " ".join(names),
        "priority " + " ".join(names[c] for c in instance.priority),
    ]
    for v in instance.voters:
        ranking = ">".join(names[c] for c in v.preference)
        utils = " ".join(f"{names[c]}={format_rational(v.utility[c])}" for c in range(instance.m))
        owa = " ".join(format_rational(w) for w in v.owa)
        lines.append(f"voter {ranking} | {utils} | {owa}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> ElectionInstance:
    size = None
    names = None
    priority = None
    voters = []
    seen_magic = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        toks = list(_tokens(body))
        key, kcol = toks[0]
        rest = toks[1:]
        if not seen_magic:
            if key != MAGIC or len(rest) != 1:
                raise ParseError(f"expected header '{MAGIC} {VERSION}'", lineno, kcol)
            if rest[0][0] != VERSION:
                raise ParseError(f"unsupported format version {rest[0][0]!r}", lineno, rest[0][1])
            seen_magic = True
        elif key == "size":
            size = _parse_size(rest, lineno, kcol)
        elif key == "candidates":
            if size is None or priority is not None:
                raise ParseError("'candidates' must come after 'size' and before 'priority'", lineno, kcol)
            names = _parse_names(rest, size[0], lineno, kcol)
        elif key == "priority":
            if size is None:
                raise ParseError("'priority' must follow 'size'", lineno, kcol)
            if names is None:
                names = default_names(size[0])
            priority = _parse_permutation(rest, names, "priority", lineno, kcol)
        elif key == "voter":
            if priority is None:
                raise ParseError("'voter' lines must follow 'priority'", lineno, kcol)
            voters.append(_parse_voter(body, toks, names, size[2], lineno))
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, kcol)
    if not seen_magic:
        raise ParseError("empty instance text")
    if size is None or priority is None:
        raise ParseError("instance needs 'size' and 'priority' lines")
    m, n, k = size
    if len(voters) != n:
        raise ParseError(f"size declares n={n} voters but {len(voters)} voter lines were given")
    try:
        return ElectionInstance(k, tuple(voters), priority, names)
    except ContractError as exc:
        raise ParseError(str(exc)) from exc


def _parse_size(rest, lineno, kcol):
    found = {}
    for tok, col in rest:
        m = re.match(r"^([mnk])=(\d+)$", tok)
        if not m or m.group(1) in found:
            raise ParseError(f"bad size field {tok!r} (expected m=.. n=.. k=..)", lineno, col)
        found[m.group(1)] = int(m.group(2))
    if set(found) != {"m", "n", "k"}:
        raise ParseError("size line needs m=, n= and k=", lineno, kcol)
    m, n, k = found["m"], found["n"], found["k"]
    if m < 1 or n < 1 or not 1 <= k <= m:
        raise ParseError(f"infeasible size m={m} n={n} k={k} (need 1 <= k <= m, n >= 1)", lineno, kcol)
    return m, n, k


def _parse_names(rest, m, lineno, kcol):
    names = [t for t, _ in rest]
    if len(names) != m:
        raise ParseError(f"expected {m} candidate names, got {len(names)}", lineno, kcol)
    for tok, col in rest:
        if not _NAME.match(tok):
            raise ParseError(f"invalid candidate name {tok!r}", lineno, col)
    if len(set(names)) != m:
        raise ParseError("duplicate candidate name", lineno, kcol)
    return tuple(names)


def _parse_permutation(rest, names, what, lineno, kcol):
    index = {name: c for c, name in enumerate(names)}
    out = []
    for tok, col in rest:
        if tok not in index:
            raise ParseError(f"unknown candidate {tok!r} in {what}", lineno, col)
        if index[tok] in out:
            raise ParseError(f"candidate {tok!r} repeated in {what}", lineno, col)
        out.append(index[tok])
    if len(out) != len(names):
        raise ParseError(f"{what} must list all {len(names)} candidates, got {len(out)}", lineno, kcol)
    return tuple(out)


def _parse_voter(body, toks, names, k, lineno):
    parts = body.split("|")
    if len(parts) != 3:
        raise ParseError("voter line needs 'ranking | utilities | owa'", lineno, toks[0][1])
    offsets = [0, len(parts[0]) + 1, len(parts[0]) + len(parts[1]) + 2]
    head = [(t, c + offsets[0]) for t, c in _tokens(parts[0])][1:]
    if len(head) != 1:
        raise ParseError("ranking must be written as a>b>c", lineno, toks[0][1])
    rank_tok, rank_col = head[0]
    ranking = []
    col = rank_col
    for name in rank_tok.split(">"):
        ranking.append((name, col))
        col += len(name) + 1
    index = {name: c for c, name in enumerate(names)}
    pref = []
    for name, col in ranking:
        if name not in index:
            raise ParseError(f"unknown candidate {name!r} in ranking", lineno, col)
        if index[name] in pref:
            raise ParseError(f"candidate {name!r} repeated in ranking", lineno, col)
        pref.append(index[name])
    if len(pref) != len(names):
        raise ParseError(f"ranking must list all {len(names)} candidates", lineno, rank_col)

    utility = [None] * len(names)
    for tok, col in ((t, c + offsets[1]) for t, c in _tokens(parts[1])):
        name, sep, value = tok.partition("=")
        if not sep or name not in index:
            raise ParseError(f"bad utility entry {tok!r} (expected name=p/q)", lineno, col)
        if utility[index[name]] is not None:
            raise ParseError(f"utility of {name!r} given twice", lineno, col)
        utility[index[name]] = _rational(value, lineno, col + len(name) + 1)
    missing = [names[c] for c, u in enumerate(utility) if u is None]
    if missing:
        raise ParseError(f"missing utilities for {missing}", lineno, offsets[1] + 1)
    if len(set(utility)) != len(utility):
        raise ParseError("duplicate utility values (preferences must be strict)", lineno, offsets[1] + 1)

    owa = [_rational(t, lineno, c + offsets[2]) for t, c in _tokens(parts[2])]
    if len(owa) != k:
        raise ParseError(f"expected {k} OWA weights, got {len(owa)}", lineno, offsets[2] + 1)
    try:
        return VoterProfile(tuple(pref), tuple(utility), tuple(owa))
    except ContractError as exc:
        raise ParseError(str(exc), lineno, toks[0][1]) from exc


def load_instance(path) -> ElectionInstance:
    return loads(Path(path).read_text(encoding="utf-8"))


def save_instance(instance: ElectionInstance, path) -> None:
    Path(path).write_text(dumps(instance), encoding="utf-8")


FIXTURES = ("ex1", "ex2", "ex2_abcd", "k1_nonexistence", "constraining")


def fixture_path(name: str) -> Path:
    """Path of a shipped fixture, e.g. ``fixture_path("ex2")``."""
    if name not in FIXTURES:
        raise ContractError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return Path(str(resources.files("approvalpne") / "fixtures" / f"{name}.inst"))


def load_fixture(name: str) -> ElectionInstance:
    return load_instance(fixture_path(name))
