"""Spectral toolkit for sectorial convolution operators a*D^gamma + A* on
the real line: direct elliptic and parabolic solvers, symbol condition
checks, resolvent sweeps, and an anisotropic two-variable extension with a
discretized boundary operator in the second variable.
"""

from .bvp import (
    BVPCoefficients,
    check_ellipticity,
    discretize_bvp,
    solve_anisotropic,
)
from .core import (
    GridFunction,
    LebesgueExponents,
    Sector,
    SpaceTimeFunction,
    SpatialGrid,
    SpectralFunction,
    SpectralGrid,
    forward_transform,
    inverse_transform,
    lp_norm,
    mixed_norm,
    random_band_limited,
)
from .elliptic import (
    DEFAULT_SEED,
    SectorialityReport,
    SolveError,
    SolveReport,
    apply_operator,
    coercive_report,
    embedding_probe,
    resolvent_sweep,
    separability_check,
    solve_elliptic,
)
from .fractional import (
    FractionalOrder,
    frac_power_i_xi,
    gl_weights,
    liouville_derivative,
    matrix_fractional_power,
    rl_derivative_oracle,
)
from .parabolic import (
    ParabolicProblem,
    SystemMatrix,
    parabolic_coercive_report,
    solve_parabolic,
    solve_parabolic_stepped,
    solve_system,
)
from .symbols import (
    CoefficientSymbol,
    ConditionReport,
    EllipticProblem,
    OperatorSymbol,
    Witness,
    check_mikhlin_bounds,
    check_sector_growth,
    constant_coefficient,
    constant_operator,
    perturbed_operator,
    q_matrices,
    q_symbol,
    scalar_inequality_suite,
    scaled_decay_coefficient,
    symbol_resolvent_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BVPCoefficients",
    "CoefficientSymbol",
    "ConditionReport",
    "DEFAULT_SEED",
    "EllipticProblem",
    "FractionalOrder",
    "GridFunction",
    "LebesgueExponents",
    "OperatorSymbol",
    "ParabolicProblem",
    "Sector",
    "SectorialityReport",
    "SolveError",
    "SolveReport",
    "SpaceTimeFunction",
    "SpatialGrid",
    "SpectralFunction",
    "SpectralGrid",
    "SystemMatrix",
    "Witness",
    "apply_operator",
    "check_ellipticity",
    "check_mikhlin_bounds",
    "check_sector_growth",
    "coercive_report",
    "constant_coefficient",
    "constant_operator",
    "discretize_bvp",
    "embedding_probe",
    "forward_transform",
    "frac_power_i_xi",
    "gl_weights",
    "inverse_transform",
    "liouville_derivative",
    "lp_norm",
    "matrix_fractional_power",
    "mixed_norm",
    "parabolic_coercive_report",
    "perturbed_operator",
    "q_matrices",
    "q_symbol",
    "random_band_limited",
    "resolvent_sweep",
    "rl_derivative_oracle",
    "scalar_inequality_suite",
    "scaled_decay_coefficient",
    "separability_check",
    "solve_anisotropic",
    "solve_elliptic",
    "solve_parabolic",
    "solve_parabolic_stepped",
    "solve_system",
    "symbol_resolvent_bound",
    "__version__",
]
