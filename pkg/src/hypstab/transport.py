"""Linear transport machinery: flow maps, entry times, explicit solution.

The scalar problem

    dy/dt + a(t, x) dy/dx = b(t, x)   on (0, T) x (0, L),
    y(t, 0) = y_l(t),  y(0, x) = y0(x),

with a >= c > 0 is solved pointwise from the characteristics: trace backward
from (t, x); if the characteristic reaches the initial line, take y0 at its
foot, otherwise take y_l at the boundary-crossing time; either way add the
source integrated along the traced curve.  Characteristic ODEs use classical
fourth-order Runge-Kutta with a fixed step, and the line integrals use the
trapezoid rule on the same substeps (positive weights, so the a-priori
sup-norm estimate survives discretization).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Grid, TransportError

__all__ = ["CoefficientField", "TransportData", "flow", "entry_time", "solve_transport"]

_FLOOR_SAMPLES = 33
_COMPAT_TOL = 1e-12


@dataclass(frozen=True)
class CoefficientField:
    """Speed and source coefficients on the slab [0, t_max] x [0, length].

    ``a`` and ``b`` map (t, x) arrays to arrays; ``b=None`` means a zero
    source (skips the line integrals entirely).  Construction samples the
    speed on a fixed lattice and rejects the field if it dips below
    ``c_floor``.
    """

    a: Callable
    b: Callable | None
    c_floor: float
    t_max: float
    length: float
    lipschitz_a: float | None = None
    lipschitz_b: float | None = None
    a_sup: float | None = None
    bounding_box: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.c_floor > 0:
            raise ValueError(f"speed floor must be > 0, got {self.c_floor}")
        if not (self.t_max > 0 and self.length > 0):
            raise ValueError("t_max and length must be > 0")
        ts = np.linspace(0.0, self.t_max, _FLOOR_SAMPLES)[:, None]
        xs = np.linspace(0.0, self.length, _FLOOR_SAMPLES)[None, :]
        sampled = np.asarray(self.a(ts + 0.0 * xs, xs + 0.0 * ts), dtype=float)
        a_min = float(sampled.min())
        if a_min < self.c_floor - 1e-9:
            raise ValueError(
                f"sampled speed {a_min:.6g} below the floor c={self.c_floor:.6g}"
            )
        if self.a_sup is None:
            object.__setattr__(self, "a_sup", float(sampled.max()))

    def default_step(self) -> float:
        """Default RK4 step: resolves one boundary-to-boundary transit in 2000 steps."""
        return (self.length / self.c_floor) / 2000.0


@dataclass(frozen=True)
class TransportData:
    """Initial profile and left boundary trace, as callables on arrays.

    Compatibility y_l(0) = y0(0) is required within 1e-12: the explicit
    solution formula assumes it, and the quasilinear reduction always supplies
    compatible data by construction.
    """

    y0: Callable
    y_l: Callable
    lipschitz_y0: float | None = None
    lipschitz_yl: float | None = None

    def __post_init__(self):
        left = float(np.asarray(self.y0(np.asarray(0.0))))
        trace = float(np.asarray(self.y_l(np.asarray(0.0))))
        if abs(left - trace) > _COMPAT_TOL * max(1.0, abs(left), abs(trace)):
            raise TransportError(
                f"incompatible data: y_l(0)={trace!r} but y0(0)={left!r}"
            )

    @classmethod
    def from_samples(cls, y0_samples: np.ndarray, grid: Grid, y_l: Callable,
                     **kwargs) -> "TransportData":
        samples = np.asarray(y0_samples, dtype=float)
        nodes = grid.nodes

        def y0(x):
            return np.interp(x, nodes, samples)

        return cls(y0=y0, y_l=y_l, **kwargs)


def _rk4_step(a: Callable, r, p, dt):
    """One classical RK4 step of dx/dr = a(r, x) from (r, p) to r + dt (signed)."""
    half = 0.5 * dt
    k1 = a(r, p)
    k2 = a(r + half, p + half * k1)
    k3 = a(r + half, p + half * k2)
    k4 = a(r + dt, p + dt * k3)
    return p + dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)


def flow(field: CoefficientField, s, t, x, max_step: float | None = None):
    """Characteristic position phi_a(s, t, x): through (t, x), evaluated at s.

    Broadcasts over array arguments; integrates each element with its own
    uniform RK4 step no larger than ``max_step``.  Raises TransportError if a
    characteristic leaves the configured bounding box.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    scalar = s.ndim == 0 and t.ndim == 0 and x.ndim == 0
    s, t, p = np.broadcast_arrays(s, t, x)
    p = p.astype(float).copy()
    if max_step is None:
        max_step = field.default_step()
    span = float(np.abs(s - t).max()) if s.size else 0.0
    n_sub = max(1, math.ceil(span / max_step - 1e-12))
    dt = (s - t) / n_sub
    box = field.bounding_box
    for k in range(n_sub):
        r = t + k * dt
        p = _rk4_step(field.a, r, p, dt)
        if box is not None and (np.any(p < box[0]) or np.any(p > box[1])):
            raise TransportError(
                f"characteristic left the bounding box {box} at step {k + 1}/{n_sub}"
            )
    return float(p) if scalar else p


def entry_time(field: CoefficientField, t, x, tol: float = 1e-12,
               max_step: float | None = None):
    """Earliest time from which the backward characteristic stays in [0, L].

    Zero whenever the characteristic through (t, x) reaches the initial line
    (x at or beyond the dividing curve phi(t, 0, 0)); otherwise the unique
    root s of phi(s, t, x) = 0, found by bisection to ``tol`` in time.  The
    lower bracket end uses the transit bound t - e <= L / c.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    scalar = t.ndim == 0 and x.ndim == 0
    t, x = np.broadcast_arrays(t, x)
    shape = t.shape
    t = t.astype(float).ravel()
    x = x.astype(float).ravel()
    out = np.zeros_like(t)

    divide = np.asarray(flow(field, t, np.zeros_like(t), np.zeros_like(t), max_step))
    inside = x < divide  # strict: on the curve itself the entry time is 0
    if np.any(inside):
        ti = t[inside]
        xi = x[inside]
        pad = 0.05 * field.length / field.c_floor
        lo = np.maximum(0.0, ti - field.length / field.c_floor - pad)
        hi = ti.copy()
        phi_lo = np.asarray(flow(field, lo, ti, xi, max_step))
        if np.any(phi_lo >= 0):
            raise TransportError(
                "entry-time bracketing failed: backward characteristic did not "
                "exit within L/c (speed floor violated?)"
            )
        guard = 0
        while float(np.max(hi - lo)) > tol:
            mid = 0.5 * (lo + hi)
            phi = np.asarray(flow(field, mid, ti, xi, max_step))
            above = phi > 0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
            guard += 1
            if guard > 200:
                raise TransportError("entry-time bisection stalled")
        out[inside] = 0.5 * (lo + hi)
    shaped = out.reshape(shape)
    return float(shaped) if scalar else shaped


def solve_transport(field: CoefficientField, data: TransportData, grid: Grid,
                    times, max_step: float | None = None) -> np.ndarray:
    """Evaluate the explicit solution formula on the grid nodes at ``times``.

    Returns an array of shape (len(times), n_cells + 1).  All requested times
    are traced simultaneously: every (time, node) pair owns one backward
    characteristic, marched with a uniform per-row RK4 step, with the source
    accumulated by the trapezoid rule along the way.  Characteristics that
    cross x = 0 have their crossing time refined to O(step^4) by a chord
    guess plus one Newton correction.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < -1e-12) or np.any(times > field.t_max + 1e-9):
        raise ValueError("requested times must lie inside [0, t_max]")
    if max_step is None:
        max_step = grid.h / (2.0 * field.a_sup)
    nodes = grid.nodes
    n_t, n_x = times.size, nodes.size

    n_steps = np.array([max(0, math.ceil(tj / max_step - 1e-12)) for tj in times])
    dt_row = np.where(n_steps > 0, times / np.maximum(n_steps, 1), 0.0)

    P = np.broadcast_to(nodes, (n_t, n_x)).astype(float).copy()
    I = np.zeros((n_t, n_x))
    entry = np.zeros((n_t, n_x))
    crossed = np.zeros((n_t, n_x), dtype=bool)
    t_row = np.broadcast_to(times[:, None], (n_t, n_x))
    dt_full = np.broadcast_to(dt_row[:, None], (n_t, n_x))
    steps_full = np.broadcast_to(n_steps[:, None], (n_t, n_x))

    a, b = field.a, field.b
    for k in range(int(n_steps.max()) if n_steps.size else 0):
        active = (~crossed) & (k < steps_full)
        if not np.any(active):
            break
        idx = np.where(active)
        p_old = P[idx]
        dt = dt_full[idx]
        r_old = t_row[idx] - k * dt
        r_new = r_old - dt
        p_new = _rk4_step(a, r_old, p_old, -dt)

        hit = p_new < 0.0
        if np.any(hit):
            ph_old = p_old[hit]
            ph_new = p_new[hit]
            rh_old = r_old[hit]
            dth = dt[hit]
            frac = ph_old / (ph_old - ph_new)
            e0 = rh_old - frac * dth
            rho = _rk4_step(a, rh_old, ph_old, e0 - rh_old)
            slope = a(e0, rho)
            e1 = np.clip(e0 - rho / slope, np.maximum(r_new[hit], 0.0), rh_old)
            rows, cols = idx[0][hit], idx[1][hit]
            entry[rows, cols] = e1
            crossed[rows, cols] = True
            if b is not None:
                chunk = 0.5 * (rh_old - e1) * (b(rh_old, ph_old) + b(e1, np.zeros_like(e1)))
                I[rows, cols] += chunk

        keep = ~hit
        rows, cols = idx[0][keep], idx[1][keep]
        P[rows, cols] = p_new[keep]
        if b is not None and rows.size:
            chunk = 0.5 * dt[keep] * (b(r_old[keep], p_old[keep]) + b(r_new[keep], p_new[keep]))
            I[rows, cols] += chunk

    values = np.where(crossed, data.y_l(np.where(crossed, entry, 0.0)),
                      data.y0(np.where(crossed, 0.0, P))) + I
    return values
