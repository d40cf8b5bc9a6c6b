"""Divergence-free velocity fields with non-unique transported densities, built from self-similar cube dynamics."""

from .analysis import contraction_constants, feasibility, heuristic_density_bound, weak_residual
from .blocks import BlockParams, b_field, block_density, block_velocity
from .ensemble import CubeEnsemble
from .l1 import L1Params, l1_density, l1_density_cubes, l1_velocity
from .lr import LrParams, lr_density, lr_density_cubes, lr_velocity

__all__ = [
    "BlockParams",
    "CubeEnsemble",
    "L1Params",
    "LrParams",
    "b_field",
    "block_density",
    "block_velocity",
    "contraction_constants",
    "feasibility",
    "heuristic_density_bound",
    "l1_density",
    "l1_density_cubes",
    "l1_velocity",
    "lr_density",
    "lr_density_cubes",
    "lr_velocity",
    "weak_residual",
]
