"""The proof kernel and its supporting pieces."""

from .axioms import (
    AxiomRegistry, AxiomSchema, SchemaMismatch, default_registry,
    instantiate_axiom,
)
from .index import NegativeIndex, index_equal, index_eval, index_leq
from .kernel import CheckResult, check
from .proof import ProofNode, ProofScript

__all__ = [
    "AxiomRegistry", "AxiomSchema", "CheckResult", "NegativeIndex",
    "ProofNode", "ProofScript", "SchemaMismatch", "check",
    "default_registry", "index_equal", "index_eval", "index_leq",
    "instantiate_axiom",
]
