"""Shipped mechanisms, their derivations, adversaries and validation."""

from .registry import (
    CASE_NAMES, CaseStudy, DEFAULT_PARAMS, PreconditionViolated,
    ValidationReport, build_case, case_proof, case_source, check_case,
    rnm_analytic_bound, validate_case,
)

__all__ = [
    "CASE_NAMES", "CaseStudy", "DEFAULT_PARAMS", "PreconditionViolated",
    "ValidationReport", "build_case", "case_proof", "case_source",
    "check_case", "rnm_analytic_bound", "validate_case",
]
