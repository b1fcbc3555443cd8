"""Simulation and linear analysis of a volume-constrained droplet contact line.

The contact line is a star-shaped polar graph ``r = r_e + rho(theta)``;
its normal speed follows a contact-angle law applied to the boundary flux
of the torsion problem on the wetted domain.
"""
from .coords import CoordDecomposition, decompose, matrix_M, recompose, reduced_rhs, track
from .dynamics import (
    ContactLaw, DynamicsConfig, TrajectoryRecord, evolve, find_equilibrium, radial_rhs, velocity,
)
from .errors import (
    ConfigError, ContactLawError, DecompositionError, DropletError, IllConditionedDomainError,
    ShapeError, SolverError,
)
from .linearization import analytic_DG0, numerical_jacobian, spectrum
from .shape import ShapeFunction, boundary_frame, recenter, translated_circle
from .solver import harmonic_extend, solve_base

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContactLaw", "ContactLawError", "CoordDecomposition", "DecompositionError",
    "DropletError", "DynamicsConfig", "IllConditionedDomainError", "ShapeError", "ShapeFunction",
    "SolverError", "TrajectoryRecord", "analytic_DG0", "boundary_frame", "decompose", "evolve",
    "find_equilibrium", "harmonic_extend", "matrix_M", "numerical_jacobian", "radial_rhs",
    "recenter", "recompose", "reduced_rhs", "solve_base", "spectrum", "track",
    "translated_circle", "velocity",
]
