"""Potentials and heat potentials of quasi-interpolated densities."""

__version__ = "0.1.0"

from .dequad import QuadratureRule, SubstChain, node_search
from .genfun import GenFunOrder, ShapeParams, quasi_interpolant
from .grid import GridDensity
from .heat import HeatOrder, LambdaRule, SpaceTimeGrid, heat_error_table, solve_orderSM
from .kernels import Family, PotentialSpec
from .tensorconv import SeparableKernel, apply_direct, apply_separable, build_separable_kernel

__all__ = [
    "__version__",
    "Family",
    "GenFunOrder",
    "GridDensity",
    "HeatOrder",
    "LambdaRule",
    "PotentialSpec",
    "QuadratureRule",
    "SeparableKernel",
    "ShapeParams",
    "SpaceTimeGrid",
    "SubstChain",
    "apply_direct",
    "apply_separable",
    "build_separable_kernel",
    "heat_error_table",
    "node_search",
    "quasi_interpolant",
    "solve_orderSM",
]
