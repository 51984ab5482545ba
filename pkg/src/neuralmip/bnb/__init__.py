from .policies import (
    MostFractional,
    PseudocostState,
    ReliabilityPseudocost,
    StrongBranching,
    argmax_lowest,
    make_policy,
    most_fractional_select,
    reliability_pseudocost_select,
    sb_score,
    sb_score_from_values,
    strong_branching_select,
)
from .solver import (
    BnbConfig,
    BnbNode,
    BnbResult,
    BnbStatus,
    BranchingPolicy,
    NodeContext,
    NodeSelection,
    fractional_candidates,
    mip_gap,
    solve_bnb,
)

__all__ = [
    "BnbConfig", "BnbNode", "BnbResult", "BnbStatus", "BranchingPolicy", "MostFractional",
    "NodeContext", "NodeSelection", "PseudocostState", "ReliabilityPseudocost",
    "StrongBranching", "argmax_lowest", "fractional_candidates", "make_policy", "mip_gap",
    "most_fractional_select", "reliability_pseudocost_select", "sb_score",
    "sb_score_from_values", "strong_branching_select", "solve_bnb",
]
