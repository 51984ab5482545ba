from .oracle import OracleResult, OracleScaleError, brute_force_milp, reference_lp
from .problem import (
    Assignment,
    FeasibilityReport,
    MilpError,
    MilpProblem,
    check_feasible,
    fix_variables,
    make_problem,
)
from .simplex import (
    BasisStatus,
    Certificate,
    LpNumericalError,
    LpSolution,
    LpStatus,
    WarmStart,
    lp_certificate,
    solve_lp,
)

__all__ = [
    "Assignment", "BasisStatus", "Certificate", "FeasibilityReport", "LpNumericalError",
    "LpSolution", "LpStatus", "MilpError", "MilpProblem", "OracleResult", "OracleScaleError",
    "WarmStart", "brute_force_milp", "check_feasible", "fix_variables", "lp_certificate",
    "make_problem", "reference_lp", "solve_lp",
]
