"""Dynamical boundary conditions: the nonlinear boundary ODE in closed form.

The boundary offsets solve dY/dt = -K * Y / |Y|^gamma, which reaches the
target exactly at time |Y(0)|^gamma / (gamma * K) and stays there.  The
right-hand side is not Lipschitz at Y = 0, so the trajectory is always
evaluated in closed form; a generic integrator would chatter near extinction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FeedbackState", "feedback_offset", "extinction_time"]


@dataclass(frozen=True)
class FeedbackState:
    """One boundary offset channel: initial offset, gain and exponent.

    ``target`` records the absolute boundary value the channel steers to
    (the reference state component); the offset dynamics never use it.
    """

    y0: float
    gain: float
    exponent: float
    target: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent}")


def feedback_offset(state: FeedbackState, t):
    """Offset Y(t) of the boundary trace from its target, in closed form.

    Y(t) = sign(Y0) * max(|Y0|^gamma - gamma*K*t, 0)^(1/gamma); exactly zero
    for every t past the extinction time.  Y0 = 0 yields the zero trajectory.
    Accepts scalar or array ``t``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    g = state.exponent
    core = np.maximum(np.abs(state.y0) ** g - g * state.gain * t, 0.0)
    out = np.sign(state.y0) * core ** (1.0 / g)
    return float(out) if out.ndim == 0 else out


def extinction_time(state: FeedbackState) -> float:
    """Time |Y0|^gamma / (gamma * K) at which the offset reaches zero."""
    if state.y0 == 0.0:
        return 0.0
    return float(abs(state.y0) ** state.exponent / (state.exponent * state.gain))
