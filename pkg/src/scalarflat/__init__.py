"""Scalar-flat normal graphs over cones on product-of-spheres links."""

from .angular import AngularGrid
from .calculus import ConeGeometry, explicit_leading_Q, jacobi_apply, nonlinear_remainder
from .embedding import embed_graph, scalar_curvature_field, shape_operator_fd, verdict_summary
from .errors import ConfigError, NumericalFailure, ScalarFlatError
from .fields import ConeField, RadialGrid
from .link_geometry import CliffordLink, elementary_symmetric, invariants, solve_scalar_flat_radii
from .radial import harmonic_extension, solve_linear, solve_mode
from .solver import Diagnostics, SolverConfig, lambda_threshold_scan, picard_step, solve_graph
from .spectrum import ModeBasis, SpectralMode, enumerate_modes, mode_eigenvalue, select_threshold
from .stability import (cone_stability, graph_form_battery, graph_s3_deviation, hardy_check,
                        instability_witness, rayleigh_quotient)

__version__ = "0.1.0"

__all__ = [
    "AngularGrid", "CliffordLink", "ConeField", "ConeGeometry", "ConfigError", "Diagnostics",
    "ModeBasis", "NumericalFailure", "RadialGrid", "ScalarFlatError", "SolverConfig",
    "SpectralMode", "cone_stability", "elementary_symmetric", "embed_graph", "enumerate_modes",
    "explicit_leading_Q", "graph_form_battery", "graph_s3_deviation", "hardy_check",
    "harmonic_extension", "instability_witness", "invariants", "jacobi_apply",
    "lambda_threshold_scan", "mode_eigenvalue", "nonlinear_remainder", "picard_step",
    "rayleigh_quotient", "scalar_curvature_field", "select_threshold", "shape_operator_fd",
    "solve_graph", "solve_linear", "solve_mode", "solve_scalar_flat_radii", "verdict_summary",
]
