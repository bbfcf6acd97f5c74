"""Stability toolkit for the radial hedgehog of the Landau-de Gennes model."""

from .model import Params, s_plus, rescale_params
from .profile import RadialGrid, SolverOptions, solve_profile, default_grid

__all__ = ["Params", "s_plus", "rescale_params",
           "RadialGrid", "SolverOptions", "solve_profile", "default_grid"]
