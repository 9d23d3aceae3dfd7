"""Conforming rectangular mixed finite elements for planar linear elasticity.

The stress is symmetric and H(div)-conforming: normal components come from
enriched (or plain) BDFM-type spaces, shear components from serendipity
(or complete) spaces.  The package builds the reference elements, assembles
and solves the Hellinger-Reissner saddle-point system on uniform meshes of
the unit square, and provides stability diagnostics and 3D reference-element
audits.
"""

from .assembly import Discretization, IncompatibleLoadError, Material, QuadratureOrderError, assemble
from .mesh import macroelements, uniform_mesh
from .refelem import UnisolvenceError, verify_unisolvence
from .solve import SolverError, solve
from .study import ManufacturedProblem, convergence_table, error_norms, solve_problem

__version__ = "0.1.0"

__all__ = [
    "Discretization",
    "IncompatibleLoadError",
    "ManufacturedProblem",
    "Material",
    "QuadratureOrderError",
    "SolverError",
    "UnisolvenceError",
    "assemble",
    "convergence_table",
    "error_norms",
    "macroelements",
    "solve",
    "solve_problem",
    "uniform_mesh",
    "verify_unisolvence",
]
