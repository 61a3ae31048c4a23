"""Command-line interface: ``approvalpne <command> [options]``.

Voters are numbered from 1 on the command line. Profiles are written as
ballots separated by ``;`` with candidates separated by ``,``, for example
``--profile "a,b;;c"`` (the second voter approves nobody). ``--instance``
takes a file path or ``fixture:NAME`` for a shipped fixture.

Exit status: 0 on success, 1 when a checked property fails or nothing was
found, 2 for usage, parse and contract errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import instance_io
from .equilibrium import (
    ConstructionFailure,
    DeviationWitness,
    Dichotomy,
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
)
from .errors import ConfigError, ContractError, InvariantViolation, ParseError
from .experiment import replay_report, run_experiment
from .generate import ANALYSES, OWA_SCHEMES, UTILITY_SCHEMES, ExperimentConfig, generate_instance
from .model import ideal_union, owa_utility
from .rules import (
    STANDARD_AV,
    approval_scores,
    candidate_weighted,
    check_monotonic_robustness,
    check_relative_rank_monotonicity,
    check_robustness_exhaustive,
    check_rrm_exhaustive,
    elect,
    random_weighted_rule,
    standard_av,
)
from .strategy import (
    brute_force_best_responses,
    constraining_witness,
    minimal_best_response,
    sincere_best_response,
    sincere_completion,
)

RESULT_SCHEMA = "approvalpne-result/1"
GLOBAL_DEFAULTS = {"rule": "av", "seed": 0, "format": "text"}
PROPERTIES = ("rrm", "robust", "lazy-scores", "dichotomy", "sigma", "k1")


class UsageError(Exception):
    """Bad combination of otherwise well-formed arguments."""


def _global_options(parser, suppress):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    g = parser.add_argument_group("global options")
    g.add_argument("--instance", metavar="PATH", default=default(None), help="instance file or fixture:NAME")
    g.add_argument("--rule", choices=("av", "weighted"), default=default(None), help="default av")
    g.add_argument("--weights", metavar="W1,W2,..", default=default(None), help="candidate weights for --rule weighted")
    g.add_argument("--restriction", metavar="R", type=int, default=default(None), help="maximum ballot length")
    g.add_argument("--seed", metavar="S", type=int, default=default(None), help="default 0")
    g.add_argument("--format", choices=("text", "machine"), default=default(None), help="default text")


def _range(text):
    lo, _, hi = text.partition(":")
    try:
        return (int(lo), int(hi or lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approvalpne", description="Strategic approval voting for committees.")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_options(p, suppress=True)
        return p

    p = command("gen", "generate a random instance")
    p.add_argument("--m", type=_range, default=(4, 4), metavar="LO:HI")
    p.add_argument("--n", type=_range, default=(3, 3), metavar="LO:HI")
    p.add_argument("--k", type=_range, default=(2, 2), metavar="LO:HI")
    p.add_argument("--utility-scheme", choices=UTILITY_SCHEMES, default="borda-like")
    p.add_argument("--owa-scheme", choices=OWA_SCHEMES, default="random-full-rank")
    p.add_argument("-o", "--output", metavar="PATH")

    p = command("elect", "elect a committee from a profile")
    p.add_argument("--profile", required=True)

    for name, text in (
        ("best-response", "all best responses of one voter"),
        ("mbr", "canonical minimal best response"),
        ("sincere-br", "best sincere ballot and sincere completion"),
    ):
        p = command(name, text)
        p.add_argument("--voter", type=int, required=True, help="1-based voter index")
        p.add_argument("--profile", required=True, help="full profile; the voter's own ballot is ignored")

    p = command("constraining", "search for a profile where the restriction binds")
    p.add_argument("--voter", type=int, required=True)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--mode", choices=("synthesize", "fixed"), default="synthesize")

    p = command("find-pne", "enumerate (or verify) equilibria")
    p.add_argument("--kind", choices=[k.value for k in EquilibriumKind], required=True)
    p.add_argument("--pruned", action="store_true", help="pruned lazy enumerator (standard AV)")
    p.add_argument("--profile", help="verify this profile instead of enumerating")
    p.add_argument("--all", action="store_true", help="list every certificate, not one per committee")

    p = command("construct-pne", "build an equilibrium directly")
    p.add_argument("--kind", choices=("containment", "sincere"), required=True)
    p.add_argument("--nonempty", action="store_true", help="sincere construction without empty ballots")

    p = command("check", "check a rule property, a structural result or a report")
    p.add_argument("--property", choices=PROPERTIES)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--exhaustive", action="store_true", help="rule properties: exhaustive m,n <= 3 sweep")
    p.add_argument("--report", metavar="PATH", help="replay every claim in a machine report")

    p = command("experiment", "run a seeded batch experiment")
    p.add_argument("--config", metavar="PATH", help="JSON experiment config")
    p.add_argument("--instances", type=int)
    p.add_argument("--analyses", help="comma-separated subset of " + ",".join(ANALYSES))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", metavar="PATH")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _load_instance(args):
    if args.instance is None:
        raise UsageError(f"'{args.command}' needs --instance")
    if args.instance.startswith("fixture:"):
        return instance_io.load_fixture(args.instance.split(":", 1)[1])
    try:
        return instance_io.load_instance(args.instance)
    except OSError as exc:
        raise UsageError(f"cannot read {args.instance}: {exc.strerror}") from None


def _rule(args, instance=None):
    if args.rule == "av":
        if args.weights:
            raise UsageError("--weights only applies to --rule weighted")
        return standard_av()
    if args.weights:
        try:
            return candidate_weighted([Fraction(w) for w in args.weights.split(",")])
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad --weights {args.weights!r}") from None
    if instance is None:
        return random_weighted_rule
    return random_weighted_rule(instance.m, random.Random(args.seed))


def _parse_profile(instance, text):
    index = {name: c for c, name in enumerate(instance.names)}
    ballots = text.split(";")
    if len(ballots) != instance.n:
        raise UsageError(f"profile has {len(ballots)} ballots, instance has n={instance.n}")
    out = []
    for ballot in ballots:
        names = [x.strip() for x in ballot.split(",") if x.strip()]
        unknown = [x for x in names if x not in index]
        if unknown:
            raise UsageError(f"unknown candidates {unknown} in profile")
        out.append(frozenset(index[x] for x in names))
    return tuple(out)


def _voter(instance, args):
    if not 1 <= args.voter <= instance.n:
        raise UsageError(f"--voter must be in 1..{instance.n}")
    return args.voter - 1


def _names(instance, ballot):
    return sorted(instance.names[c] for c in ballot)


def _fmt_profile(instance, profile):
    return "(" + ", ".join(instance.label(b) for b in profile) + ")"


def _q(x):
    return instance_io.format_rational(x)


class _Out:
    """Collects text lines and a machine-readable payload for one command."""

    def __init__(self, args):
        self.machine = args.format == "machine"
        self.lines = []
        self.data = {"schema": RESULT_SCHEMA, "command": args.command}

    def say(self, line=""):
        self.lines.append(line)

    def emit(self, stream):
        if self.machine:
            stream.write(json.dumps(self.data, sort_keys=True, indent=1) + "\n")
        else:
            stream.write("\n".join(self.lines) + ("\n" if self.lines else ""))


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args, out):
    config = ExperimentConfig(
        m=args.m, n=args.n, k=args.k, utility_scheme=args.utility_scheme, owa_scheme=args.owa_scheme
    )
    text = instance_io.dumps(generate_instance(config, args.seed))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        out.say(f"wrote {args.output}")
    else:
        out.lines.append(text.rstrip("\n"))
    out.data["instance"] = text
    return 0


def cmd_elect(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    profile = _parse_profile(instance, args.profile)
    committee = elect(rule, instance, profile)
    table = approval_scores(rule, instance, profile)
    out.say(f"committee {instance.label(committee)}")
    out.say("scores " + " ".join(f"{instance.names[c]}={_q(s)}" for c, s in enumerate(table.scores)))
    for i in range(instance.n):
        out.say(f"voter {i + 1} utility {_q(owa_utility(instance, i, committee))}")
    out.data.update(committee=_names(instance, committee), scores=[_q(s) for s in table.scores])
    return 0


def cmd_best_response(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    i = _voter(instance, args)
    report = brute_force_best_responses(instance, rule, i, _parse_profile(instance, args.profile), args.restriction)
    brs = sorted(report.br_ballots, key=lambda b: (len(b), _names(instance, b)))
    out.say(f"voter {i + 1}: best achievable utility {_q(report.achievable_utility)}")
    out.say(f"{len(brs)} best responses; minimal size {report.mbr_size}")
    for b in brs:
        out.say("  " + instance.label(b))
    out.data.update(
        voter=i + 1,
        achievable_utility=_q(report.achievable_utility),
        best_responses=[_names(instance, b) for b in brs],
        mbr_size=report.mbr_size,
    )
    if args.restriction is not None:
        out.say(
            f"within R={args.restriction}: utility {_q(report.restricted_utility)}"
            + (" (restriction binds)" if report.constrained else "")
        )
        out.data.update(restricted_utility=_q(report.restricted_utility), constrained=report.constrained)
    return 0


def cmd_mbr(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    i = _voter(instance, args)
    size, ballot = minimal_best_response(instance, rule, i, _parse_profile(instance, args.profile), args.restriction)
    j = instance.voters[i].j_star
    out.say(f"voter {i + 1}: minimal best response {instance.label(ballot)} (size {size}, j*={j})")
    out.data.update(voter=i + 1, mbr=_names(instance, ballot), size=size, j_star=j)
    return 0


def cmd_sincere_br(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    i = _voter(instance, args)
    profile = _parse_profile(instance, args.profile)
    resp = sincere_best_response(instance, rule, i, profile, args.restriction)
    _, mbr = minimal_best_response(instance, rule, i, profile)
    completed = sincere_completion(instance, rule, i, profile, mbr)
    out.say(f"voter {i + 1}: best sincere ballot {instance.label(resp.ballot)} utility {_q(resp.utility)}")
    out.say("attains the best-response utility" if resp.optimal else "does not attain the best-response utility")
    out.say(f"sincere completion of {instance.label(mbr)}: {instance.label(completed)}")
    out.data.update(
        voter=i + 1,
        sincere_ballot=_names(instance, resp.ballot),
        utility=_q(resp.utility),
        optimal=resp.optimal,
        completion=_names(instance, completed),
    )
    return 0


def cmd_constraining(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    i = _voter(instance, args)
    if args.restriction is None:
        raise UsageError("'constraining' needs --restriction")
    res = constraining_witness(instance, rule, i, args.restriction, args.budget, mode=args.mode)
    out.data.update(voter=i + 1, restriction=args.restriction, found=res.found, exhaustive=res.exhaustive)
    if not res.found:
        scope = "exhaustive search" if res.exhaustive else "search budget exhausted"
        out.say(f"no constraining witness for voter {i + 1} at R={args.restriction} ({scope})")
        return 1
    w = res.witness
    prio = " ".join(instance.names[c] for c in w.priority)
    out.say(f"voter {i + 1}, R={args.restriction}: restriction binds")
    out.say(f"  priority {prio}")
    out.say(f"  others {_fmt_profile(instance, w.others)}")
    out.say(f"  utility {_q(w.unrestricted_utility)} unrestricted vs {_q(w.restricted_utility)} restricted")
    out.data.update(
        priority=prio.split(),
        others=[_names(instance, b) for b in w.others],
        unrestricted=_q(w.unrestricted_utility),
        restricted=_q(w.restricted_utility),
        gap=_q(w.gap),
    )
    return 0


def _cert_data(instance, cert):
    return {
        "committee": _names(instance, cert.committee),
        "profile": [_names(instance, b) for b in cert.profile],
        "kind": cert.kind.value,
    }


def _lazy_enumeration(args, instance, rule, pruned=None):
    if pruned is None:
        pruned = rule.kind == STANDARD_AV
    if pruned:
        return enumerate_lazy_pruned(instance, rule)
    return enumerate_equilibria(instance, rule, EquilibriumKind.LAZY)


def cmd_find_pne(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    kind = EquilibriumKind(args.kind)
    if args.profile is not None:
        result = verify_equilibrium(instance, rule, _parse_profile(instance, args.profile), kind)
        if isinstance(result, DeviationWitness):
            out.say(
                f"not a {kind.value}-PNE: voter {result.voter + 1} switches "
                f"{instance.label(result.ballot)} -> {instance.label(result.alternate)} "
                f"({result.tag}, {_q(result.old_utility)} -> {_q(result.new_utility)})"
            )
            out.data.update(
                equilibrium=False,
                witness={
                    "voter": result.voter + 1,
                    "ballot": _names(instance, result.ballot),
                    "alternate": _names(instance, result.alternate),
                    "tag": result.tag,
                },
            )
            return 1
        out.say(f"{kind.value}-PNE with committee {instance.label(result.committee)}")
        out.data.update(equilibrium=True, certificate=_cert_data(instance, result))
        return 0
    if args.pruned and kind is not EquilibriumKind.LAZY:
        raise UsageError("--pruned applies to --kind lazy only")
    if kind is EquilibriumKind.LAZY and args.pruned:
        res = enumerate_lazy_pruned(instance, rule)
    else:
        res = enumerate_equilibria(instance, rule, kind)
    groups = sorted(res.by_committee().items(), key=lambda kv: _names(instance, kv[0]))
    out.data.update(
        kind=kind.value,
        profiles_examined=res.profiles_examined,
        committees=[_names(instance, c) for c, _ in groups],
        certificates=[_cert_data(instance, c) for _, certs in groups for c in (certs if args.all else certs[:1])],
    )
    if not groups:
        out.say(f"no {kind.value}-PNE ({res.profiles_examined} profiles examined)")
        return 1
    for committee, certs in groups:
        out.say(f"committee {instance.label(committee)}: {len(certs)} equilibrium profile(s)")
        for cert in certs if args.all else certs[:1]:
            out.say("  " + _fmt_profile(instance, cert.profile))
    return 0


def cmd_construct_pne(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    if args.kind == "containment":
        result = construct_containment_pne(instance, rule)
    else:
        result = construct_sincere_pne(instance, rule, nonempty=args.nonempty)
    if isinstance(result, ConstructionFailure):
        out.say(f"construction failed: {result.reason}")
        out.data.update(constructed=False, reason=result.reason)
        return 1
    out.say(f"{result.kind.value}-PNE with committee {instance.label(result.committee)}")
    out.say("  " + _fmt_profile(instance, result.profile))
    out.data.update(constructed=True, certificate=_cert_data(instance, result))
    return 0


def _check_rule_property(args, out):
    rule = _rule(args)
    if args.property == "rrm":
        checker = check_rrm_exhaustive if args.exhaustive else check_relative_rank_monotonicity
    else:
        checker = check_robustness_exhaustive if args.exhaustive else check_monotonic_robustness
    if args.exhaustive:
        result = checker(rule, seed=args.seed)
    else:
        result = checker(rule, trials=args.trials, seed=args.seed)
    out.data.update(property=args.property, passed=result.passed, trials=result.trials)
    if result.passed:
        out.say(f"{args.property}: PASS ({result.trials} checks)")
        return 0
    cx = result.counterexample
    inst = cx.instance
    out.say(f"{args.property}: FAIL after {result.trials} checks")
    out.say(f"  candidate {inst.names[cx.candidate]}")
    out.say(f"  before {_fmt_profile(inst, cx.before)} elects {inst.label(cx.committee_before)}")
    out.say(f"  after  {_fmt_profile(inst, cx.after)} elects {inst.label(cx.committee_after)}")
    return 1


def _check_structure(args, out):
    instance = _load_instance(args)
    rule = _rule(args, instance)
    prop = args.property
    out.data["property"] = prop
    if prop == "k1":
        predicted = k1_characterization(instance, rule)
        actual = _lazy_enumeration(args, instance, rule).committees
        ok = predicted == actual
        fmt = lambda s: " ".join(sorted(instance.label(c) for c in s)) or "none"  # noqa: E731
        out.say(f"k1: characterisation {fmt(predicted)}, enumeration {fmt(actual)}: {'PASS' if ok else 'FAIL'}")
        out.data.update(passed=ok, predicted=sorted(_names(instance, c) for c in predicted))
        return 0 if ok else 1
    certs = _lazy_enumeration(args, instance, rule).certificates
    failures = []
    checked = 0
    ideal = ideal_union(instance)
    for cert in certs:
        if prop == "lazy-scores":
            checked += 1
            if not lazy_score_facts(instance, cert):
                failures.append(cert)
        elif prop == "dichotomy":
            checked += 1
            kind = classify_lazy_dichotomy(instance, cert)
            contained_ok = kind is not Dichotomy.CONTAINS_IDEAL or containment_condition(instance, cert.committee)
            if kind is Dichotomy.VIOLATION or not contained_ok:
                failures.append(cert)
        elif prop == "sigma" and cert.committee < ideal:
            checked += 1
            if not check_sigma_condition(instance, cert):
                failures.append(cert)
    ok = not failures
    out.say(f"{prop}: {'PASS' if ok else 'FAIL'} ({checked} lazy certificates checked, {len(certs)} found)")
    for cert in failures:
        out.say(f"  violated by {instance.label(cert.committee)} from {_fmt_profile(instance, cert.profile)}")
    out.data.update(passed=ok, checked=checked, failures=[_cert_data(instance, c) for c in failures])
    return 0 if ok else 1


def cmd_check(args, out):
    if args.report:
        if args.property:
            raise UsageError("use either --report or --property")
        problems = replay_report(Path(args.report).read_text(encoding="utf-8"))
        out.data.update(replayed=not problems, problems=problems)
        for p in problems:
            out.say(p)
        out.say("report replays" if not problems else f"{len(problems)} claims failed to replay")
        return 0 if not problems else 1
    if not args.property:
        raise UsageError("'check' needs --property or --report")
    if args.property in ("rrm", "robust"):
        return _check_rule_property(args, out)
    return _check_structure(args, out)


def cmd_experiment(args, out):
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    # explicit flags override the config file
    if args.instances is not None:
        data["instances"] = args.instances
    if args.analyses is not None:
        data["analyses"] = [a for a in args.analyses.split(",") if a]
    if args.restriction is not None:
        data["restriction"] = args.restriction
    for name in ("seed", "rule"):
        if name in args.explicit or name not in data:
            data[name] = getattr(args, name)
    report = run_experiment(ExperimentConfig.from_dict(data), workers=args.workers)
    text = report.to_json() if out.machine else report.to_text()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        out.say(f"wrote {args.output}")
        out.data["output"] = args.output
        out.machine = False
    else:
        out.lines.append(text.rstrip("\n"))
        out.machine = False
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "elect": cmd_elect,
    "best-response": cmd_best_response,
    "mbr": cmd_mbr,
    "sincere-br": cmd_sincere_br,
    "constraining": cmd_constraining,
    "find-pne": cmd_find_pne,
    "construct-pne": cmd_construct_pne,
    "check": cmd_check,
    "experiment": cmd_experiment,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    args.explicit = {name for name in GLOBAL_DEFAULTS if getattr(args, name) is not None}
    for name, value in GLOBAL_DEFAULTS.items():
        if getattr(args, name) is None:
            setattr(args, name, value)
    out = _Out(args)
    try:
        code = COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(stderr)
        stderr.write(f"approvalpne {args.command}: error: {exc}\n")
        return 2
    except (ParseError, ConfigError, ContractError) as exc:
        stderr.write(f"approvalpne {args.command}: error: {exc}\n")
        return 2
    except InvariantViolation as exc:
        stderr.write(f"approvalpne {args.command}: invariant violated: {exc}\n")
        return 1
    except OSError as exc:
        stderr.write(f"approvalpne {args.command}: error: {exc}\n")
        return 2
    out.emit(stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
