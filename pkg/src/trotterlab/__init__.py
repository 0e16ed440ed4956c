"""Quantitative lattice-to-continuum approximation of semigroups.

Random-walk transition operators on Z^d (optionally with magnetic phases)
are iterated on sampled test functions and compared against heat and
constant-field magnetic semigroups, with explicit error bounds.
"""
from . import bounds, continuum, crystal, grid, operators
from .bounds import BoundInputs, bound_general, bound_simplified, clt_bound, phi_n, psi_n
from .continuum import (GeneratorSpec, TestFunction, dense_reference, gaussian, generator_apply,
                        heat_evolve, hermite_gaussian, magnetic_evolve, seminorm_inf, third_seminorm)
from .errors import (BudgetExceeded, ConvergenceError, InvalidBoundInputs, InvalidTestFunction,
                     KernelValidationError, TrotterLabError)
from .grid import (GridFunction, Interval, StencilOperator, apply, discrete_generator,
                   discrete_resolvent, embed, iterate, poisson_smooth, sup_distance)
from .operators import PotentialSpec, harper, magnetic_from_potential, simple_walk

__version__ = "0.1.0"
