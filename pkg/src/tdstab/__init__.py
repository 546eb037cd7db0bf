"""Resolvent construction, bound verification and mode evolution for the
linearized Triple-Deck and hydrostatic Navier-Stokes systems around concave
shear flows."""

from .bounds import (BoundReport, check_cancellations, check_inequality,
                     energy_identity_residual, norm_H, norm_weighted)
from .evolve import contour_semigroup, fit_gevrey, step_mode
from .grid import ConfigurationError, Grid, build_grid
from .hns_resolvent import hns_assemble, hns_direct_solve
from .linsolve import SolverError, solve
from .shearflow import Domain, ShearFlow, check_assumptions
from .td_resolvent import Mode, assemble, direct_solve, ray_mode

__all__ = [
    "BoundReport", "check_cancellations", "check_inequality",
    "energy_identity_residual", "norm_H", "norm_weighted", "contour_semigroup",
    "fit_gevrey", "step_mode", "ConfigurationError", "Grid", "build_grid",
    "hns_assemble", "hns_direct_solve", "SolverError", "solve", "Domain",
    "ShearFlow", "check_assumptions", "Mode", "assemble", "direct_solve", "ray_mode",
]
