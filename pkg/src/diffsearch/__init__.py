"""Generalized Grover search with an arbitrary diffusion operator."""

from .amplification import (
    ConditionVerdict,
    RunReport,
    build_Iu,
    classify_conditions,
    cost_model,
    modified_search,
    original_search,
    qaa_run,
)
from .analysis import (
    TOLERANCES,
    SpectralSummary,
    full_spectrum,
    predict_two_level,
    secular_roots,
    summarize,
)
from .errors import BudgetError, InfeasibleSpecError, NoMaximumFound, NumericalError, SpecError
from .pea import PEAConfig, PhaseInversionCircuit, approx_selective_inversion, required_ancillas
from .scenarios import Scenario, builtin_scenarios, engineered_spec, grover_spec, load_scenario
from .search import SuccessCurve, find_first_max, search_step, success_curve
from .spectrum import DiffusionSpec, EigenData, UnitaryOperator, build_diffusion, moments

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ConditionVerdict",
    "DiffusionSpec",
    "EigenData",
    "InfeasibleSpecError",
    "NoMaximumFound",
    "NumericalError",
    "PEAConfig",
    "PhaseInversionCircuit",
    "RunReport",
    "Scenario",
    "SpecError",
    "SpectralSummary",
    "SuccessCurve",
    "TOLERANCES",
    "UnitaryOperator",
    "approx_selective_inversion",
    "build_Iu",
    "build_diffusion",
    "builtin_scenarios",
    "classify_conditions",
    "cost_model",
    "engineered_spec",
    "find_first_max",
    "full_spectrum",
    "grover_spec",
    "load_scenario",
    "modified_search",
    "moments",
    "original_search",
    "predict_two_level",
    "qaa_run",
    "required_ancillas",
    "search_step",
    "secular_roots",
    "success_curve",
    "summarize",
]
