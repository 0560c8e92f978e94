"""Neumann least gradient problems on staggered grids.

Minimise a weighted or anisotropic total variation subject to
``<g, u>_boundary = 1`` with a Douglas-Rachford (split Bregman) iteration,
recover the dual field ``T`` and certify optimality; includes a current
density impedance imaging pipeline built on the same solver.
"""

from .cdii import ImagingData, Phantom, make_phantom, recover, synthesize
from .duality import Certificate, certify, dual_value, g_star_estimate, multiplicity_test, primal_value
from .estimators import ConductivityImager, LeastGradientSolver
from .exceptions import *  # noqa: F401,F403
from .grid import (BoundaryTrace, Grid, ScalarField, VectorField, boundary_integral,
                   divergence, gradient, inner, normal_trace, square_flow)
from .metric import Metric, phi, phi_polar, total_variation
from .poisson import LinearSolveConfig, solve_conductivity, solve_harmonic_flux, solve_poisson_neumann
from .shrinkage import ProxConfig, prox_field, prox_phi
from .solver import SolverConfig, SolverReport, SolverState, run, step

__version__ = "0.1.0"
