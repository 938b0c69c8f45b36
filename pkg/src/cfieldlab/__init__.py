"""Semilinear field equations on rotated complex rays over FRW-type backgrounds.

Modules: frame (constants, rays, branches), tensor_kit (numeric curvature),
cosmology (scale functions, FRW identities, minisuperspace), field_solver
(spectral evolution), energy_monitor (balance laws), nr_limit (c -> oo
study), geodesic (particle dynamics), cli (experiment harness).
"""
from .frame import BranchError, PhysicalConstants, RotationFrame, kappa_dimension
from .grid import Grid
from .field_solver import FieldProblem, FieldState, build_problem, evolve
from .energy_monitor import BalanceMonitor, EnergyLedger, balance_audit, regime_classify

__all__ = [
    "BranchError", "PhysicalConstants", "RotationFrame", "kappa_dimension", "Grid",
    "FieldProblem", "FieldState", "build_problem", "evolve",
    "BalanceMonitor", "EnergyLedger", "balance_audit", "regime_classify",
]
__version__ = "0.1.0"
