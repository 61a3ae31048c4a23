"""Batch experiments over generated instances, with replayable reports.

The machine-readable report is JSON tagged with :data:`SCHEMA`. Every claim
in it carries the profile, ballot or priority needed to re-derive it, and
:func:`replay_report` re-checks all of them from scratch.
"""

from __future__ import annotations

import itertools
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import instance_io
from .equilibrium import (
    DeviationWitness,
    EquilibriumKind,
    construct_sincere_pne,
    enumerate_equilibria,
    enumerate_lazy_pruned,
    verify_equilibrium,
)
from .errors import CapacityError, ContractError, PreconditionError
from .generate import ExperimentConfig, generate_instance, instance_seeds, rule_for
from .model import ElectionInstance, ideal_union, social_welfare
from .rules import STANDARD_AV
from .strategy import (
    BallotScanner,
    brute_force_best_responses,
    constraining_witness,
    minimal_best_response,
    popcount,
)

SCHEMA = "approvalpne-report/1"


def _q(x: Fraction) -> str:
    return instance_io.format_rational(x)


def _names(instance: ElectionInstance, ballot) -> list:
    return sorted(instance.names[c] for c in ballot)


def _ids(instance: ElectionInstance, names) -> frozenset:
    index = {name: c for c, name in enumerate(instance.names)}
    return frozenset(index[x] for x in names)


def _profile_out(instance, profile) -> list:
    return [_names(instance, b) for b in profile]


def _profile_in(instance, data) -> tuple:
    return tuple(_ids(instance, b) for b in data)


def _others_samples(instance, voter, config, rng):
    """Count vectors of the other voters: all of them if few, else a seeded sample."""
    n_others = instance.n - 1
    space = (n_others + 1) ** instance.m
    if space <= config.profile_samples:
        return list(itertools.product(range(n_others + 1), repeat=instance.m)), True
    return [tuple(rng.randint(0, n_others) for _ in range(instance.m)) for _ in range(config.profile_samples)], False


def _profile_from_counts(counts, n_others):
    return tuple(frozenset(c for c, s in enumerate(counts) if j < s) for j in range(n_others))


def _mbr_analysis(instance, rule, config, rng):
    scanner = BallotScanner(instance, rule)
    out = []
    for i, voter in enumerate(instance.voters):
        samples, exhaustive = _others_samples(instance, i, config, rng)
        histogram = {}
        worst = None
        for counts in samples:
            _, _, size = scanner.summary(i, counts)
            histogram[size] = histogram.get(size, 0) + 1
            if worst is None or size > worst[0]:
                worst = (size, counts)
        others = _profile_from_counts(worst[1], instance.n - 1)
        size, ballot = minimal_best_response(instance, rule, i, others)
        out.append(
            {
                "voter": i,
                "j_star": voter.j_star,
                "exhaustive": exhaustive,
                "histogram": {str(s): histogram[s] for s in sorted(histogram)},
                "max_mbr_size": worst[0],
                "bound_holds": worst[0] <= voter.j_star,
                "witness": {"others": _profile_out(instance, others), "mbr": _names(instance, ballot)},
            }
        )
    return out


def _restriction_analysis(instance, rule, rng):
    out = []
    for i in range(instance.n):
        counts = tuple(rng.randint(0, instance.n - 1) for _ in range(instance.m))
        others = _profile_from_counts(counts, instance.n - 1)
        optima = []
        for r in range(instance.m + 1):
            report = brute_force_best_responses(instance, rule, i, others, r)
            optima.append(report.restricted_utility)
        out.append(
            {
                "voter": i,
                "others": _profile_out(instance, others),
                "restricted_optimum": [_q(u) for u in optima],
                "nondecreasing": all(a <= b for a, b in zip(optima, optima[1:])),
                "reaches_unrestricted": optima[-1] == report.achievable_utility,
            }
        )
    return out


def _constraining_analysis(instance, rule, config):
    limits = [config.restriction] if config.restriction is not None else list(range(1, instance.m))
    out = []
    for r in limits:
        if r >= instance.m:
            continue
        for i, voter in enumerate(instance.voters):
            res = constraining_witness(instance, rule, i, r, config.search_budget)
            row = {
                "voter": i,
                "restriction": r,
                "j_star": voter.j_star,
                "found": res.found,
                "exhaustive": res.exhaustive,
                "predicted": voter.j_star > r,
            }
            if res.found:
                w = res.witness
                row["witness"] = {
                    "priority": [instance.names[c] for c in w.priority],
                    "others": _profile_out(instance, w.others),
                    "unrestricted": _q(w.unrestricted_utility),
                    "restricted": _q(w.restricted_utility),
                    "gap": _q(w.gap),
                }
            out.append(row)
    return out


def _cert_out(instance, cert):
    return {
        "committee": _names(instance, cert.committee),
        "profile": _profile_out(instance, cert.profile),
        "kind": cert.kind.value,
    }


def _equilibrium_analysis(instance, rule, config):
    out = {}
    try:
        if rule.kind == STANDARD_AV:
            lazy = enumerate_lazy_pruned(instance, rule)
            method = "pruned"
        else:
            lazy = enumerate_equilibria(instance, rule, "lazy", cap=config.enumeration_cap)
            method = "naive"
        firsts = [certs[0] for _, certs in sorted(lazy.by_committee().items(), key=lambda kv: sorted(kv[0]))]
        out["lazy"] = {
            "method": method,
            "exists": lazy.exists,
            "committees": [_names(instance, c.committee) for c in firsts],
            "certificates": [_cert_out(instance, c) for c in firsts],
        }
    except CapacityError as exc:
        out["lazy"] = {"skipped": str(exc)}
    try:
        if instance.n > instance.m and rule.kind == STANDARD_AV:
            cert = construct_sincere_pne(instance, rule)
            out["sincere"] = {"method": "constructed", "exists": True, "certificates": [_cert_out(instance, cert)]}
        else:
            res = enumerate_equilibria(instance, rule, "sincere", cap=config.enumeration_cap)
            first = sorted(res.by_committee().items(), key=lambda kv: sorted(kv[0]))
            out["sincere"] = {
                "method": "naive",
                "exists": res.exists,
                "certificates": [_cert_out(instance, certs[0]) for _, certs in first],
            }
    except (CapacityError, PreconditionError) as exc:
        out["sincere"] = {"skipped": str(exc)}
    return out


def _welfare_analysis(instance, equilibria):
    lazy, sincere = equilibria.get("lazy", {}), equilibria.get("sincere", {})
    if not lazy.get("exists") or not sincere.get("exists"):
        return {"compared": False}
    best_lazy = max(social_welfare(instance, _ids(instance, c["committee"])) for c in lazy["certificates"])
    first_sincere = social_welfare(instance, _ids(instance, sincere["certificates"][0]["committee"]))
    return {
        "compared": True,
        "lazy": _q(best_lazy),
        "sincere": _q(first_sincere),
        "lazy_better": best_lazy > first_sincere,
    }


def analyse_instance(config: ExperimentConfig, index: int, seed: int) -> dict:
    instance = generate_instance(config, seed)
    rule = rule_for(config, instance, seed)
    rng = random.Random(seed ^ 0xA11)
    record = {
        "index": index,
        "seed": seed,
        "instance": instance_io.dumps(instance),
        "rule": {"kind": rule.kind, "weights": [_q(w) for w in rule.weights]},
        "m": instance.m,
        "n": instance.n,
        "k": instance.k,
        "ideal_union_size": len(ideal_union(instance)),
        "full_rank": all(v.full_rank for v in instance.voters),
    }
    try:
        if "mbr" in config.analyses:
            record["mbr"] = _mbr_analysis(instance, rule, config, rng)
        if "restriction" in config.analyses:
            record["restriction"] = _restriction_analysis(instance, rule, rng)
        if "constraining" in config.analyses:
            record["constraining"] = _constraining_analysis(instance, rule, config)
        if "equilibria" in config.analyses or "welfare" in config.analyses:
            eq = _equilibrium_analysis(instance, rule, config)
            if "equilibria" in config.analyses:
                record["equilibria"] = eq
            if "welfare" in config.analyses:
                record["welfare"] = _welfare_analysis(instance, eq)
    except CapacityError as exc:
        record["skipped"] = str(exc)
    return record


def _rate(hits, total):
    return None if total == 0 else _q(Fraction(hits, total))


def _aggregate(records) -> dict:
    agg = {"instances": len(records), "skipped": sum("skipped" in r for r in records)}
    mbr = [row for r in records for row in r.get("mbr", [])]
    if mbr:
        agg["mbr_bound_violations"] = sum(not row["bound_holds"] for row in mbr)
        agg["mbr_voters"] = len(mbr)
    rest = [row for r in records for row in r.get("restriction", [])]
    if rest:
        agg["restriction_monotone"] = all(row["nondecreasing"] and row["reaches_unrestricted"] for row in rest)
    cons = [row for r in records for row in r.get("constraining", [])]
    if cons:
        agg["constraining_checks"] = len(cons)
        agg["constraining_found"] = sum(row["found"] for row in cons)
        agg["constraining_matches_prediction"] = sum(row["found"] == row["predicted"] for row in cons)
    lazy = [r["equilibria"]["lazy"] for r in records if "lazy" in r.get("equilibria", {})]
    lazy = [x for x in lazy if "skipped" not in x]
    sincere = [r["equilibria"]["sincere"] for r in records if "sincere" in r.get("equilibria", {})]
    sincere = [x for x in sincere if "skipped" not in x]
    if lazy or sincere:
        agg["lazy_exists_rate"] = _rate(sum(x["exists"] for x in lazy), len(lazy))
        agg["sincere_exists_rate"] = _rate(sum(x["exists"] for x in sincere), len(sincere))
    welfare = [r["welfare"] for r in records if r.get("welfare", {}).get("compared")]
    if welfare:
        agg["welfare_compared"] = len(welfare)
        agg["welfare_lazy_better"] = sum(w["lazy_better"] for w in welfare)
    return agg


@dataclass(frozen=True)
class Report:
    config: dict
    records: tuple
    aggregates: dict

    def to_json(self) -> str:
        doc = {"schema": SCHEMA, "config": self.config, "records": list(self.records), "aggregates": self.aggregates}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    def to_text(self) -> str:
        lines = [f"experiment: {self.aggregates['instances']} instances, seed {self.config['seed']}"]
        for key in sorted(self.aggregates):
            if key != "instances":
                lines.append(f"  {key}: {self.aggregates[key]}")
        for r in self.records:
            head = f"#{r['index']}: m={r['m']} n={r['n']} k={r['k']} |W*|={r['ideal_union_size']}"
            if "skipped" in r:
                lines.append(head + f" skipped ({r['skipped']})")
                continue
            eq = r.get("equilibria", {})
            lazy = eq.get("lazy", {})
            if "committees" in lazy:
                cs = " ".join("{" + ",".join(c) + "}" for c in lazy["committees"]) or "none"
                head += f" lazy: {cs}"
            sincere = eq.get("sincere", {})
            if sincere.get("certificates"):
                head += " sincere: {" + ",".join(sincere["certificates"][0]["committee"]) + "}"
            lines.append(head)
        return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig, workers: int = 1) -> Report:
    """Analyse ``config.instances`` generated instances; output order is by index."""
    seeds = instance_seeds(config)
    jobs = list(enumerate(seeds))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(analyse_instance, [config] * len(jobs), *zip(*jobs)))
    else:
        records = [analyse_instance(config, i, s) for i, s in jobs]
    return Report(config.to_dict(), tuple(records), _aggregate(records))


# ---------------------------------------------------------------------------
# replay


def _rule_from(record):
    from .rules import RuleSpec

    data = record["rule"]
    return RuleSpec(data["kind"], tuple(Fraction(w) for w in data["weights"]))


def replay_record(record: dict) -> list:
    """Re-derive every claim of one record; returns a list of problems (empty if all replay)."""
    problems = []
    if "skipped" in record:
        return problems
    instance = instance_io.loads(record["instance"])
    rule = _rule_from(record)
    tag = f"record {record['index']}"
    for row in record.get("mbr", []):
        others = _profile_in(instance, row["witness"]["others"])
        size, ballot = minimal_best_response(instance, rule, row["voter"], others)
        if size != row["max_mbr_size"] or sorted(_names(instance, ballot)) != row["witness"]["mbr"]:
            problems.append(f"{tag}: MBR witness for voter {row['voter']} does not replay")
    for row in record.get("constraining", []):
        if not row["found"]:
            continue
        w = row["witness"]
        prio = [instance.names.index(x) for x in w["priority"]]
        inst = instance.with_priority(prio)
        rep = brute_force_best_responses(inst, rule, row["voter"], _profile_in(inst, w["others"]), row["restriction"])
        if _q(rep.achievable_utility - rep.restricted_utility) != w["gap"] or not rep.constrained:
            problems.append(f"{tag}: constraining witness for voter {row['voter']} R={row['restriction']} does not replay")
    for label, block in record.get("equilibria", {}).items():
        for cert in block.get("certificates", []):
            profile = _profile_in(instance, cert["profile"])
            result = verify_equilibrium(instance, rule, profile, EquilibriumKind(cert["kind"]))
            if isinstance(result, DeviationWitness) or sorted(_names(instance, result.committee)) != cert["committee"]:
                problems.append(f"{tag}: {label} certificate {cert['committee']} does not replay")
    return problems


def replay_report(text: str) -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContractError(f"report is not JSON ({exc}); write it with --format machine") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        schema = doc.get("schema") if isinstance(doc, dict) else None
        raise ContractError(f"unsupported report schema {schema!r}")
    problems = []
    for record in doc["records"]:
        problems.extend(replay_record(record))
    return problems
