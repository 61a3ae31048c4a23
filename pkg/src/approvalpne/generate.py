"""Seeded random instances and the experiment configuration."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

from .errors import ConfigError
from .model import ElectionInstance, VoterProfile
from .rules import RuleSpec, random_weighted_rule, standard_av

UTILITY_SCHEMES = ("borda-like", "random-rational")
OWA_SCHEMES = ("best", "worst", "additive", "random-full-rank", "random-any")
ANALYSES = ("mbr", "restriction", "constraining", "equilibria", "welfare")
RULES = ("av", "weighted")

_POSITIVE = (Fraction(1), Fraction(2), Fraction(3), Fraction(1, 2), Fraction(3, 2))
_ANY = (Fraction(0), Fraction(0), Fraction(1), Fraction(2), Fraction(1, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    m: tuple = (3, 4)
    n: tuple = (2, 4)
    k: tuple = (1, 2)
    utility_scheme: str = "borda-like"
    owa_scheme: str = "random-full-rank"
    instances: int = 10
    seed: int = 0
    restriction: Optional[int] = None
    rule: str = "av"
    analyses: tuple = ANALYSES
    profile_samples: int = 256
    search_budget: int = 4096
    enumeration_cap: int = 1 << 16

    def __post_init__(self):
        for name in ("m", "n", "k"):
            lo_hi = tuple(getattr(self, name))
            if len(lo_hi) != 2 or lo_hi[0] > lo_hi[1] or lo_hi[0] < 1:
                raise ConfigError(f"{name} must be a range [lo, hi] with 1 <= lo <= hi, got {lo_hi}")
            object.__setattr__(self, name, lo_hi)
        if self.k[0] > self.m[1]:
            raise ConfigError(f"k >= {self.k[0]} can never fit m <= {self.m[1]}")
        if self.utility_scheme not in UTILITY_SCHEMES:
            raise ConfigError(f"utility scheme must be one of {UTILITY_SCHEMES}")
        if self.owa_scheme not in OWA_SCHEMES:
            raise ConfigError(f"OWA scheme must be one of {OWA_SCHEMES}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}")
        unknown = set(self.analyses) - set(ANALYSES)
        if unknown:
            raise ConfigError(f"unknown analyses {sorted(unknown)}; choose from {ANALYSES}")
        object.__setattr__(self, "analyses", tuple(a for a in ANALYSES if a in self.analyses))
        if self.instances < 0:
            raise ConfigError("instances must be >= 0")
        if self.restriction is not None and self.restriction < 0:
            raise ConfigError("restriction must be >= 0")

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("m", "n", "k", "analyses"):
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data = dict(data)
        for name in ("m", "n", "k"):
            if name in data and isinstance(data[name], int):
                data[name] = (data[name], data[name])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _utilities(rng: random.Random, m: int, scheme: str) -> list:
    """Distinct utilities listed best-first."""
    if scheme == "borda-like":
        return [Fraction(m - j) for j in range(m)]
    base = sorted(rng.sample(range(1, 4 * m + 1), m), reverse=True)
    q = 2 * m + 3
    bumps = rng.sample(range(q), m)
    # perturbations stay below 1, so the integer order is preserved
    return [Fraction(b) + Fraction(p, q) for b, p in zip(base, bumps)]


def owa_vector(rng: random.Random, k: int, scheme: str) -> tuple:
    if scheme == "best":
        return (Fraction(1),) + (Fraction(0),) * (k - 1)
    if scheme == "worst":
        return (Fraction(0),) * (k - 1) + (Fraction(1),)
    if scheme == "additive":
        return (Fraction(1),) * k
    if scheme == "random-full-rank":
        top = rng.randint(1, k)
        return tuple(rng.choice(_POSITIVE) for _ in range(top)) + (Fraction(0),) * (k - top)
    weights = [rng.choice(_ANY) for _ in range(k)]
    if not any(weights):
        weights[rng.randrange(k)] = Fraction(1)
    return tuple(weights)


def generate_instance(config: ExperimentConfig, seed: int) -> ElectionInstance:
    """Deterministic in ``(config, seed)``."""
    rng = random.Random(seed)
    m = rng.randint(*config.m)
    n = rng.randint(*config.n)
    k_hi = min(config.k[1], m)
    if config.k[0] > k_hi:
        raise ConfigError(f"no committee size in {config.k} fits m={m}")
    k = rng.randint(config.k[0], k_hi)
    voters = []
    for _ in range(n):
        pref = list(range(m))
        rng.shuffle(pref)
        utils = _utilities(rng, m, config.utility_scheme)
        voters.append(VoterProfile.from_ranking(pref, owa_vector(rng, k, config.owa_scheme), utils))
    priority = list(range(m))
    rng.shuffle(priority)
    return ElectionInstance(k, tuple(voters), tuple(priority))


def rule_for(config: ExperimentConfig, instance: ElectionInstance, seed: int) -> RuleSpec:
    if config.rule == "av":
        return standard_av()
    return random_weighted_rule(instance.m, random.Random(seed ^ 0x5EED))


def instance_seeds(config: ExperimentConfig) -> list:
    rng = random.Random(config.seed)
    return [rng.getrandbits(63) for _ in range(config.instances)]
