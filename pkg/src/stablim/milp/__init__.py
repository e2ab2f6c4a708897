"""Small MILP toolkit: model container, simplex, branch-and-bound, oracle, LP files."""

from .bnb import Limits, solve_milp
from .lpfile import LpParseError, export_lp, read_lp
from .model import INF, Constraint, LinExpr, MilpModel, ModelError, SolveResult, VarRef
from .oracle import enumerate_oracle
from .simplex import LpTimeout, NumericalInstabilityError, solve_lp

__all__ = [
    "INF", "Constraint", "LinExpr", "Limits", "LpParseError", "MilpModel", "ModelError",
    "LpTimeout", "NumericalInstabilityError", "SolveResult", "VarRef", "enumerate_oracle", "export_lp",
    "read_lp", "solve_lp", "solve_milp",
]
