"""Executable semantics: exact sub-distributions and seeded trials."""

from .evalexpr import (
    DivisionByZero, UbhlRuntimeError, UnboundedQuantifierAtRuntime,
    eval_expr, eval_in_memory,
)
from .exact import Budget, SubDist, denote_exact, initial_memory
from .rng import TrialRng
from .trial import (
    AdversaryStrategy, EstimateReport, TrialAborted, clopper_pearson_upper,
    estimate_failure, run_trial,
)
from .values import ArrayVal, Memory

__all__ = [
    "AdversaryStrategy", "ArrayVal", "Budget", "DivisionByZero",
    "EstimateReport", "Memory", "SubDist", "TrialAborted", "TrialRng",
    "UbhlRuntimeError", "UnboundedQuantifierAtRuntime",
    "clopper_pearson_upper", "denote_exact", "estimate_failure", "eval_expr",
    "eval_in_memory", "initial_memory", "run_trial",
]
