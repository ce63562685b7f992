"""Numerical solutions of self-dual fractional-vortex equations.

The scalar equation and the two-field system are solved on doubly periodic
cells and on (truncated) planes by minimising strictly convex energy
functionals with a damped Newton-Krylov method.
"""

from .background import composite_fields, periodic_background, planar_background
from .diagnostics import DiagnosticsReport, quantization_check, run_all, sign_check, uniqueness_probe
from .energy import ProblemClass, ScalarProblem, SystemProblem, build_problem
from .grid import PeriodicCell, PeriodicGrid, PlanarBox, read_field, write_field
from .model import (
    ConfigurationError,
    FeasibilityError,
    FeasibilityVerdict,
    Regime,
    ScalarModel,
    SystemModel,
    VortexSet,
    classify_regime,
    feasibility_scalar_periodic,
    feasibility_system_periodic,
    guaranteed_sign_properties,
)
from .solver import (
    ConvergenceError,
    Solution,
    SolverOptions,
    minimize,
    solve_scalar_periodic,
    solve_scalar_planar,
    solve_system_periodic,
    solve_system_planar,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "DiagnosticsReport",
    "FeasibilityError",
    "FeasibilityVerdict",
    "PeriodicCell",
    "PeriodicGrid",
    "PlanarBox",
    "ProblemClass",
    "Regime",
    "ScalarModel",
    "ScalarProblem",
    "Solution",
    "SolverOptions",
    "SystemModel",
    "SystemProblem",
    "VortexSet",
    "build_problem",
    "classify_regime",
    "composite_fields",
    "feasibility_scalar_periodic",
    "feasibility_system_periodic",
    "guaranteed_sign_properties",
    "minimize",
    "periodic_background",
    "planar_background",
    "quantization_check",
    "read_field",
    "run_all",
    "sign_check",
    "solve_scalar_periodic",
    "solve_scalar_planar",
    "solve_system_periodic",
    "solve_system_planar",
    "uniqueness_probe",
    "write_field",
]
