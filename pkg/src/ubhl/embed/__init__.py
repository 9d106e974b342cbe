"""Ghost-code embedding into standard Hoare logic."""

from .crosscheck import ConsistencyReport, collect_sites, crosscheck
from .instrument import HoareTriple, MissingAxiomAssignment, SiteSpec, embed
from .runtime import GhostTrial, run_ghost_trial
from .wp import MissingInvariant, WpResult, wp

__all__ = [
    "ConsistencyReport", "GhostTrial", "HoareTriple",
    "MissingAxiomAssignment", "MissingInvariant", "SiteSpec", "WpResult",
    "collect_sites", "crosscheck", "embed", "run_ghost_trial", "wp",
]
