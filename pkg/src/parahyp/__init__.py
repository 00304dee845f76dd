"""Numerical solution of a nonlocal problem for a parabolic-hyperbolic equation.

The heat equation holds in the unit square and the wave equation in three
characteristic triangles attached to its bottom and sides. Nonlocal
conditions tie together values of the solution on characteristics of
different triangles. The solver reduces the problem to traces on the three
interfaces, determines them from a pair of weakly singular Volterra
equations, and rebuilds the field.
"""

from .problem import ProblemSpec, ProblemValidationError, load_config, validate_problem
from .quadrature import GridFunction
from .traces import SingularSystemError, TraceSet, TraceSolution, solve_problem
from .field import reconstruct_field
from .verify import mms_case, mms_catalog

__all__ = [
    "ProblemSpec",
    "ProblemValidationError",
    "load_config",
    "validate_problem",
    "GridFunction",
    "SingularSystemError",
    "TraceSet",
    "TraceSolution",
    "solve_problem",
    "reconstruct_field",
    "mms_case",
    "mms_catalog",
]

__version__ = "0.1.0"
