"""Pseudospectral traveling-wave solver for the damped shallow-water system."""

from .errors import (
    DepthCollapse,
    DimensionMismatch,
    GridMismatch,
    InvalidCase,
    KrylovStagnation,
    MaxItersExceeded,
    NonFiniteSymbol,
    NonPositiveDepth,
    NonPositivePhysical,
    NonZeroMean,
    NonZeroMeanData,
    ShallowTWError,
    SingularSymbol,
    SolverError,
    SweepStalled,
    ZeroFrequency,
)
from .spectral import (
    Grid,
    SpectralField,
    aniso_norm,
    dealias,
    divergence,
    dyadic_smoother,
    freq_split,
    gradient,
    hminus1_seminorm,
    jacobian,
    l2_norm,
    laplacian,
    leray_project,
    param_norms,
    riesz,
    sobolev_norm,
    traceless_strain,
    transform_forward,
    transform_inverse,
    viscous_stress,
)
from .spectral import apply_multiplier
from .state import OMNISONIC, SUBSONIC, Params, State
from .symbols import (
    DispersionSample,
    SymbolReport,
    adn_classify,
    det_lower_bound,
    det_symbol,
    dispersion,
    matrix_symbol,
    principal_symbol,
    reduced_symbol_1d,
    region_of,
    repar_symbol_1d,
    surface_symbol,
    surface_symbol_bound_gap,
)
from .model import (
    ForcingData,
    Residual,
    StressForcingInput,
    apply_linearized,
    apply_principal,
    apply_remainder,
    apply_rescaled_split,
    apply_trivial_linearization,
    boundary_decay_ratio,
    dissipation_identity_residual,
    forcing_from_stress,
    forcing_poly,
    forcing_poly_derivative,
    residual,
    residual_1d,
    v_from_eta,
)
from .solve import (
    NewtonConfig,
    SolveReport,
    TrivialSolver,
    newton_solve,
    nondimensionalize,
    solve_1d,
    solve_linearized,
    solve_trivial,
)
from .sweep import SweepPlan, limit_report, sweep

__all__ = [name for name in dir() if not name.startswith("_")]
