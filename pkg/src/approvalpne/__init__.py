"""Strategic approval voting for committees: best responses and pure Nash equilibria.

All arithmetic is exact (:class:`fractions.Fraction`). Hot loops run in a
compiled extension when it is available and fall back to pure Python
otherwise; see :mod:`approvalpne.kernels`.
"""

from .equilibrium import (
    ConstructionFailure,
    DeviationWitness,
    Dichotomy,
    EnumerationResult,
    EquilibriumCertificate,
    EquilibriumKind,
    SigmaCheck,
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
from .errors import (
    CapacityError,
    ConfigError,
    ContractError,
    InvariantViolation,
    ParseError,
    PreconditionError,
)
from .experiment import Report, replay_report, run_experiment
from .generate import ExperimentConfig, generate_instance
from .instance_io import dumps, load_fixture, load_instance, loads, save_instance
from .kernels import BACKEND
from .model import (
    Comparison,
    ElectionInstance,
    VoterProfile,
    ideal_set,
    ideal_union,
    is_full_rank,
    j_star,
    owa_utility,
    prefers,
    social_welfare,
)
from .rules import (
    RuleSpec,
    approval_scores,
    candidate_weighted,
    check_monotonic_robustness,
    check_relative_rank_monotonicity,
    elect,
    standard_av,
)
from .strategy import (
    BestResponseReport,
    brute_force_best_responses,
    constraining_witness,
    is_sincere,
    minimal_best_response,
    sincere_best_response,
    sincere_completion,
)

__version__ = "0.1.0"
