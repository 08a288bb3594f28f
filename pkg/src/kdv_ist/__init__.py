"""KdV Cauchy problem by the inverse scattering transform.

Direct problem through Jost-solution series in a Moebius variable, linear
evolution of the scattering data, and reconstruction from truncated
Gelfand-Levitan-Marchenko systems.
"""

from .glm import RecoveredPotential, recover_potential
from .jost import CoefficientTables, direct_coefficients
from .pipeline import CauchyProblem, SolutionField, analytic_soliton, diagnostics, solve_cauchy
from .potential import BUILTINS, Potential, build_potential, builtin_potential, check_faddeev, potential_from_file
from .scatter import ScatteringData, SeriesAtOrigin, direct_scattering, evolve

__version__ = "0.1.0"

__all__ = [
    "BUILTINS",
    "CauchyProblem",
    "CoefficientTables",
    "Potential",
    "RecoveredPotential",
    "ScatteringData",
    "SeriesAtOrigin",
    "SolutionField",
    "analytic_soliton",
    "build_potential",
    "builtin_potential",
    "check_faddeev",
    "diagnostics",
    "direct_coefficients",
    "direct_scattering",
    "evolve",
    "potential_from_file",
    "recover_potential",
    "solve_cauchy",
]
