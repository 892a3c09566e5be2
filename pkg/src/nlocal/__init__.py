"""Network nonlocality with noisy, possibly jointly measurable, local measurements.

Chain and star networks of independent two-qubit sources, their behaviors,
the chain and star nonlocality functionals, joint-measurability tests for
noisy qubit pairs, explicit local models, and a setting optimiser.
"""
from ._backend import COMPILED
from .inequalities import (
    InequalityReport,
    evaluate,
    linear_bound_analytic,
    linear_bound_noisy,
    linear_lhs,
    star_bound_analytic,
    star_bound_noisy,
    star_lhs,
)
from .measurements import (
    DichotomicObservable,
    IncompatibleError,
    MeasurementPair,
    bell_basis,
    compatibility_threshold,
    ghz_basis,
    is_compatible,
    parent_povm,
)
from .network import Behavior, NetworkScenario, Party, behavior, linear_scenario, star_scenario
from .scenario_io import ScenarioParseError
from .scenario_io import load as load_scenario
from .scenario_io import loads as loads_scenario
from .search import EdgeSpec, InfeasibleError, SearchSpec, optimize
from .states import TwoQubitState, bell_state, from_bloch, from_matrix, random_state, werner
from .theorems import (
    CriterionError,
    thm1_construct,
    thm2_audit,
    thm3_bilocal_model,
    thm4_construct,
    thm5_audit,
    thm6_star_model,
    thm7_fnn_decompose,
)

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "Behavior",
    "CriterionError",
    "DichotomicObservable",
    "EdgeSpec",
    "IncompatibleError",
    "InequalityReport",
    "InfeasibleError",
    "MeasurementPair",
    "NetworkScenario",
    "Party",
    "ScenarioParseError",
    "SearchSpec",
    "TwoQubitState",
    "behavior",
    "bell_basis",
    "bell_state",
    "compatibility_threshold",
    "evaluate",
    "from_bloch",
    "from_matrix",
    "ghz_basis",
    "is_compatible",
    "linear_bound_analytic",
    "linear_bound_noisy",
    "linear_lhs",
    "linear_scenario",
    "load_scenario",
    "loads_scenario",
    "optimize",
    "parent_povm",
    "random_state",
    "star_bound_analytic",
    "star_bound_noisy",
    "star_lhs",
    "star_scenario",
    "thm1_construct",
    "thm2_audit",
    "thm3_bilocal_model",
    "thm4_construct",
    "thm5_audit",
    "thm6_star_model",
    "thm7_fnn_decompose",
    "werner",
]
