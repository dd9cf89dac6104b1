"""Stationary states, linearized spectra and surface-tension thresholds for a
necrotic-core tumor free-boundary model."""

from .radial import (
    InvalidParameterError,
    ModelParams,
    NoNecroticCoreError,
    RadialStationary,
    SolverError,
    solve_k_of_r,
    solve_r_star,
    solve_stationary_radius,
)
from .modes import ModeSolution, solve_modes, solve_u_mode, v_mode_slope
from .spectrum import (
    SpectrumReport,
    classify_stability,
    gamma_k,
    gamma_star,
    heleshaw_spectrum,
)
from .dynamics import evolve_modes, evolve_radius, radial_velocity
from .verify import verify_suite

__version__ = "0.1.0"

__all__ = [
    "InvalidParameterError", "ModelParams", "NoNecroticCoreError", "RadialStationary", "SolverError",
    "solve_k_of_r", "solve_r_star", "solve_stationary_radius",
    "ModeSolution", "solve_modes", "solve_u_mode", "v_mode_slope",
    "SpectrumReport", "classify_stability", "gamma_k", "gamma_star", "heleshaw_spectrum",
    "evolve_modes", "evolve_radius", "radial_velocity", "verify_suite",
]
