"""Transverse-mode coupling of light in a Kerr medium.

Library + CLI for exact Gauss-Laguerre mode-coupling coefficients, optical
bistability of a driven single-ended Kerr cavity, and linearized quantum
noise (squeezing) spectra of the output field.
"""

from .cavity import (
    BistabilityCurve,
    CavityConfig,
    ConvergenceError,
    SteadyState,
    bistability_scan,
    scattering_matrix,
    single_mode_steady,
    stability_eigenvalues,
    truncated_multimode_steady,
)
from .coupling import (
    MuConstants,
    lambda_exact,
    lambda_p,
    lambda_pp,
    lambda_pq,
    lambda_shortcuts,
    mu_constants,
)
from .freespace import (
    FreeSpaceResult,
    ThinMediumParams,
    added_noise_corr,
    fluct_transform,
    integrate_coupled_modes,
    propagate_mean,
)
from .modes import (
    BeamGeometry,
    LaguerrePolynomial,
    laguerre_poly,
    mode_value,
    overlap_quadrature,
)
from .multimode import (
    PerturbativeConfig,
    brute_force_fluctuations,
    brute_output_correlation,
    output_correlation,
    r0_matrix,
    steady_state_perturbative,
    transfer_matrix,
    v_add,
)
from .presets import PRESETS, FigureResult, Series, build_preset
from .spectra import (
    LocalOscillator,
    intensity_noise,
    optimized_lo_noise,
    optimum_quadrature,
    quadrature_covariance,
    quadrature_noise,
)
from .twomode import (
    TwoModeConfig,
    TwoModeSteady,
    drift_matrices,
    output_correlation_twomode,
    two_mode_scan,
    two_mode_steady,
    two_mode_working_point,
)

__all__ = [
    "BeamGeometry",
    "BistabilityCurve",
    "CavityConfig",
    "ConvergenceError",
    "FigureResult",
    "FreeSpaceResult",
    "LaguerrePolynomial",
    "LocalOscillator",
    "MuConstants",
    "PRESETS",
    "PerturbativeConfig",
    "Series",
    "SteadyState",
    "ThinMediumParams",
    "TwoModeConfig",
    "TwoModeSteady",
    "added_noise_corr",
    "bistability_scan",
    "brute_force_fluctuations",
    "brute_output_correlation",
    "build_preset",
    "drift_matrices",
    "fluct_transform",
    "intensity_noise",
    "integrate_coupled_modes",
    "laguerre_poly",
    "lambda_exact",
    "lambda_p",
    "lambda_pp",
    "lambda_pq",
    "lambda_shortcuts",
    "mode_value",
    "mu_constants",
    "optimized_lo_noise",
    "optimum_quadrature",
    "output_correlation",
    "output_correlation_twomode",
    "overlap_quadrature",
    "propagate_mean",
    "quadrature_covariance",
    "quadrature_noise",
    "r0_matrix",
    "scattering_matrix",
    "single_mode_steady",
    "stability_eigenvalues",
    "steady_state_perturbative",
    "transfer_matrix",
    "truncated_multimode_steady",
    "two_mode_scan",
    "two_mode_steady",
    "two_mode_working_point",
    "v_add",
]

__version__ = "0.1.0"
