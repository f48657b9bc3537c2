"""Boundary stabilization of 2x2 quasilinear hyperbolic balance laws.

Numerical laboratory for the small-source stabilization theory: stationary
profiles by contraction, a characteristics transport engine, windowed
fixed-point solving of the coupled system under dynamical boundary feedback,
Lyapunov decay certificates with rate ~ (c/L) ln(1/eps), and the desk-scale
spectral sharpness analysis.
"""

__version__ = "0.1.0"

from .core import (
    BallExitError,
    ConfigError,
    ConvergenceError,
    Grid,
    HypstabError,
    MembershipError,
    ProfilePair,
    RunConfig,
    SystemSpec,
    TransportError,
    cumulative_quadrature,
    quadrature,
    validate_config,
)
from .feedback import FeedbackState, extinction_time, feedback_offset
from .lyapunov import (
    LyapunovParams,
    RateReport,
    decay_rate,
    fit_decay,
    kappa,
    l_theta,
    l_tilde_theta,
    linf_interpolation_check,
    optimal_theta,
    rate_report,
)
from .models import (
    SaintVenantParams,
    SavageHutterParams,
    build_system,
    custom_system,
    sh_system,
    sv_from_riemann,
    sv_system,
    sv_to_riemann,
    with_epsilon,
)
from .quasilinear import (
    PerturbationCoefficients,
    SimulationResult,
    SolverBounds,
    TrajectoryField,
    frozen_coefficients,
    picard_step,
    simulate,
    solve_window,
)
from .spectral import (
    EigenPair,
    ShiftPropagator,
    dominant_eigenvalue,
    eigen_pair,
    eigenfunction,
    propagator_norms,
    solve_alpha,
    tail_rate,
)
from .steady import SteadyState, picard_map, solve_steady
from .transport import (
    CoefficientField,
    TransportData,
    entry_time,
    flow,
    solve_transport,
)
