"""Spectra and constant/sign-changing curvature profiles of foliated
manifolds, reduced to one-dimensional degenerate Sturm-Liouville problems.

The reduction data of a system (M, g, f) with ‖∇f‖² = b∘f and Δf = a∘f are
one-variable profiles; everything downstream (operators, spectra, conformal
transforms, nonlinear solves) lives on the reduced interval.
"""

from . import cli, conformal, discretize, exprlang, profiles, solver, spectral, system
from ._kernels import BACKEND, available_backends, get_backend
from .conformal import (ConformalFactor, conformal_system, covariance_check,
                        scalar_curvature_of, yamabe_functional, yamabe_k_value)
from .discretize import DiscreteOperator, Grid, assemble, solve_shifted
from .errors import (ConfigurationError, DegenerateSecondEigenvalue,
                     DivergentArclength, EigenFailure, ExponentOutOfRange,
                     NoConvergence, NonPositiveMass, NotPositiveOperator,
                     NumericalError, SingularShift, UnsupportedDimension,
                     ZeroFunction, ZeroWeight)
from .profiles import ExpressionProfile, Profile, TableProfile
from .solver import (MinimizeResult, NodalRecord, Solution,
                     bifurcation_threshold_check, csc_count_lower_bound,
                     minimize_second_yamabe, nodal_analysis, residual,
                     solve_subcritical)
from .spectral import SpectralResult, eigs, generalized_eigs
from .system import (ArclengthSystem, DimensionConstants, IsoparametricSystem,
                     ValidationReport, build_product, build_sphere_linear,
                     build_sphere_quadratic, catalog_names, get_system,
                     integrate, load_system, parse_system_text, to_arclength,
                     unit_sphere_volume, validate, warped_scalar_profile)

__version__ = "0.1.0"
apply_operator = discretize.apply
