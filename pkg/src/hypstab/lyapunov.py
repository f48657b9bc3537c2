"""Exponential-weight Lyapunov functionals and decay-rate certificates.

The weighted energy int U^2 e^(-theta x) + V^2 e^(-theta (L-x)) dx decays at
rate c*theta - C - C*eps*(3 + e^(theta L))/2 along trajectories, where C is a
uniform bound on speeds, their spatial variation along the flow, and the
(scaled) source slopes.  Minimizing over theta gives the certified rate

    C_eps = (c/L) ln(1/eps) - [c/L + C - (c/L) ln(2c/(C L))] - (3C/2) eps,

which grows like (c/L) ln(1/eps) as the source amplitude vanishes.  A second
functional of the boundary offsets absorbs the boundary terms, so the sum
obeys the same differential inequality from time zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Grid, ProfilePair, quadrature

__all__ = [
    "LyapunovParams",
    "RateReport",
    "InterpolationReport",
    "l_theta",
    "l_tilde_theta",
    "estimate_c_tilde",
    "optimal_theta",
    "decay_rate",
    "kappa",
    "linf_interpolation_check",
    "fit_decay",
    "default_fit_window",
    "rate_report",
]


@dataclass(frozen=True)
class LyapunovParams:
    """Weight exponent and the uniform constant, with the system scales."""

    theta: float
    c_tilde: float
    c: float
    length: float
    gain: float
    exponent: float

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not self.c_tilde > 0:
            raise ValueError(f"c_tilde must be > 0, got {self.c_tilde}")


@dataclass(frozen=True)
class RateReport:
    """Certified and fitted decay data for one source amplitude."""

    epsilon: float
    theta: float
    c_eps: float
    kappa: float
    fitted_slope: float
    fit_window: tuple[float, float]
    status: str = "ok"


def l_theta(profiles: ProfilePair, theta: float, grid: Grid) -> float:
    """Weighted energy int_0^L U^2 e^(-theta x) + V^2 e^(-theta(L-x)) dx."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    profiles.check_grid(grid)
    x = grid.nodes
    w = (profiles.u ** 2 * np.exp(-theta * x)
         + profiles.v ** 2 * np.exp(-theta * (grid.length - x)))
    return float(quadrature(w, grid))


def l_tilde_theta(offsets, params: LyapunovParams) -> float:
    """Boundary Lyapunov term for the two offsets (a, b).

    C |a|^(g+2) e^(theta c |a|^g / (K g)) / (K (g+2)) plus the same in b.
    """
    a, b = offsets
    g = params.exponent
    k = params.gain
    scale = params.c_tilde / (k * (g + 2.0))

    def term(y):
        y = abs(float(y))
        return scale * y ** (g + 2.0) * math.exp(params.theta * params.c * y ** g / (k * g))

    return term(a) + term(b)


def estimate_c_tilde(coeffs, trajectory, epsilon: float) -> float:
    """Smallest sampled constant dominating sources, speeds and their slopes.

    Samples the realized trajectory only (that is all the decay estimate
    needs), then applies a 1.1 safety factor for the sampling gap:
      |F|, |G| <= (C eps / 2)(|a| + |b|),  sup(alpha, beta) <= C,
      |d/dx alpha(x, U, V)|, |d/dx beta(x, U, V)| <= C.
    """
    grid = trajectory.grid
    x = grid.nodes[None, :]
    U, V = trajectory.U, trajectory.V
    alpha = np.asarray(coeffs.alpha(x, U, V)) + 0.0 * U
    beta = np.asarray(coeffs.beta(x, U, V)) + 0.0 * U
    cands = [float(alpha.max()), float(beta.max())]
    for w in (alpha, beta):
        slope = np.gradient(w, grid.h, axis=1)
        cands.append(float(np.abs(slope).max()))
    if epsilon > 0.0 and not getattr(coeffs, "source_free", False):
        denom = np.abs(U) + np.abs(V)
        scale = max(float(denom.max()), 1.0)
        mask = denom > 1e-9 * scale
        if np.any(mask):
            f_vals = np.abs(np.asarray(coeffs.F(x, U, V)) + 0.0 * U)
            g_vals = np.abs(np.asarray(coeffs.G(x, U, V)) + 0.0 * U)
            cands.append(float((2.0 * f_vals[mask] / (epsilon * denom[mask])).max()))
            cands.append(float((2.0 * g_vals[mask] / (epsilon * denom[mask])).max()))
    return 1.1 * max(cands)


def _check_eps_range(c: float, length: float, c_tilde: float, epsilon: float) -> None:
    hi = 2.0 * c / (c_tilde * length)
    if not 0.0 < epsilon < hi:
        raise ValueError(
            f"epsilon must lie in (0, 2c/(C L)) = (0, {hi:.6g}) for a positive "
            f"optimal weight, got {epsilon}"
        )


def optimal_theta(c: float, length: float, c_tilde: float, epsilon: float) -> float:
    """Weight minimizing the decay estimate: (1/L) ln(2c / (C eps L))."""
    _check_eps_range(c, length, c_tilde, epsilon)
    return math.log(2.0 * c / (c_tilde * epsilon * length)) / length


def decay_rate(c: float, length: float, c_tilde: float, epsilon: float) -> float:
    """Certified exponential rate C_eps of the combined functional."""
    _check_eps_range(c, length, c_tilde, epsilon)
    const = c / length + c_tilde - (c / length) * math.log(2.0 * c / (c_tilde * length))
    return (c / length) * math.log(1.0 / epsilon) - const - 1.5 * c_tilde * epsilon


def kappa(c: float, delta: float, exponent: float, gain: float, length: float) -> float:
    """Amplification exponent c delta^gamma / (K L gamma)."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    return c * delta ** exponent / (gain * length * exponent)


@dataclass(frozen=True)
class InterpolationReport:
    """Margins of the sup-norm interpolation inequalities on one sample set."""

    ok: bool
    sup_norm: float
    l2_norm: float
    lip_norm: float
    margin_l2: float
    margin_cube: float
    margin_anchored: float | None


def linf_interpolation_check(samples: np.ndarray, grid: Grid,
                             zero_at_left: bool = False) -> InterpolationReport:
    """Check the discrete interpolation inequalities, reporting margins.

    At least one of ||u||_inf <= (2/sqrt(L)) ||u||_2 or
    ||u||_inf^3 <= 8 ||u||_2^2 ||u'||_inf must hold; with u(0) = 0 the
    anchored form ||u||_inf^3 <= 16 ||u||_2^2 ||u'||_inf must hold as well.
    Failure is reported, never raised.
    """
    samples = np.asarray(samples, dtype=float)
    sup = float(np.abs(samples).max())
    l2 = float(math.sqrt(quadrature(samples ** 2, grid)))
    lip = float(np.abs(np.diff(samples)).max() / grid.h) if samples.size > 1 else 0.0
    margin_l2 = 2.0 / math.sqrt(grid.length) * l2 - sup
    margin_cube = 8.0 * l2 ** 2 * lip - sup ** 3
    ok = margin_l2 >= 0.0 or margin_cube >= 0.0
    margin_anchored = None
    if zero_at_left:
        margin_anchored = 16.0 * l2 ** 2 * lip - sup ** 3
        ok = ok and margin_anchored >= 0.0
    return InterpolationReport(ok=ok, sup_norm=sup, l2_norm=l2, lip_norm=lip,
                               margin_l2=margin_l2, margin_cube=margin_cube,
                               margin_anchored=margin_anchored)


def fit_decay(times: np.ndarray, values: np.ndarray,
              window: tuple[float, float]) -> float:
    """Least-squares slope of ln(value) against t, restricted to the window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_a, t_b = window
    mask = (times >= t_a) & (times <= t_b)
    if int(mask.sum()) < 10:
        raise ValueError(f"need at least 10 points in the fit window, got {int(mask.sum())}")
    vals = values[mask]
    if np.any(vals <= 0):
        raise ValueError("fit window contains nonpositive values")
    slope, _ = np.polyfit(times[mask], np.log(vals), 1)
    return float(slope)


def default_fit_window(extinction: float, c: float, length: float,
                       t_final: float) -> tuple[float, float]:
    """Fit after the boundary dies out and one transit completes."""
    return (extinction + length / c, t_final)


def rate_report(result, fit_window: tuple[float, float] | None = None) -> RateReport:
    """Assemble the certified and fitted rates of one simulation result.

    The fitted slope is d ln ||(U,V)||_L2 / dt on the window (the unsquared
    norm); series that reach the extinction floor are marked rather than fit.
    """
    if fit_window is None:
        fit_window = default_fit_window(result.extinction, result.spec.c,
                                        result.grid.length, float(result.times[-1]))
    mask = (result.times >= fit_window[0]) & (result.times <= fit_window[1])
    window_vals = result.l2[mask]
    floor = 1e-13 * max(1.0, float(result.l2.max()))
    if window_vals.size and float(window_vals.min()) <= floor:
        return RateReport(epsilon=result.epsilon, theta=result.theta,
                          c_eps=result.c_eps, kappa=result.kappa,
                          fitted_slope=math.nan, fit_window=fit_window,
                          status="extinct")
    try:
        slope = fit_decay(result.times, result.l2, fit_window)
    except ValueError as exc:
        return RateReport(epsilon=result.epsilon, theta=result.theta,
                          c_eps=result.c_eps, kappa=result.kappa,
                          fitted_slope=math.nan, fit_window=fit_window,
                          status=f"fit-error: {exc}")
    return RateReport(epsilon=result.epsilon, theta=result.theta,
                      c_eps=result.c_eps, kappa=result.kappa,
                      fitted_slope=slope, fit_window=fit_window, status="ok")
