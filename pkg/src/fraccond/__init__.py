"""Distinct nonlocal conductivities with matching data on disjoint
exterior windows, built and checked on a uniform 1D grid."""
from .assembly import (ConductivityField, StiffnessMatrix, assemble_potential_mass,
                       assemble_stiffness, classify_dofs, energy)
from .counterexample import (ConvergenceReport, CounterexampleReport, CutoffSpec, build_bounded,
                             build_cutoff, build_scaled, convergence_study, family_generate,
                             verify_identity)
from .dn import DNMatrix, compare_dn, dn_matrix, probe_difference
from .errors import FracCondError
from .fracops import (FracParams, MollifierSpec, frac_gradient_eval, frac_laplacian_fourier,
                      frac_laplacian_quadrature, mollify, normalization_constant)
from .geometry import IntervalSet, WindowConfig, choose_omega, dilate, distance, select_epsilon
from .grid import GridFunction, UniformGrid
from .solver import ExteriorValueProblem, check_max_principle, solve_exterior_value

__version__ = "0.1.0"
