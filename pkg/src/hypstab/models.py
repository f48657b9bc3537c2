"""Physical front-ends mapped to diagonal form through Riemann invariants.

Saint-Venant (canal flow with slowly varying bottom and friction) and
Savage-Hutter (flow along an inclined bottom) both reduce to the diagonal
system with wave speeds (3u+v)/4 and -(u+3v)/4 and a shared source density.
The source amplitude is split off as epsilon = its sup-norm seminorm, so the
solver sees an order-one density f = F / epsilon; the split convention is
recorded in the spec metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import ConfigError, Grid, RunConfig, SystemSpec

__all__ = [
    "SaintVenantParams",
    "SavageHutterParams",
    "sv_to_riemann",
    "sv_from_riemann",
    "sv_system",
    "sh_system",
    "custom_system",
    "build_system",
    "with_epsilon",
]

_SUP_SAMPLES = 4097  # fixed lattice for sup seminorms; hits x = L/4 exactly


@dataclass(frozen=True)
class SaintVenantParams:
    """Canal parameters: gravity, friction coefficient and bottom slope.

    ``slope_profile`` selects the shape of the bottom slope d(b)/dx on
    [0, length]: "constant" gives slope_amplitude everywhere, "sine" gives
    slope_amplitude * sin(2 pi x / length).
    """

    gravity: float = 9.81
    friction: float = 0.0
    slope_amplitude: float = 0.0
    slope_profile: str = "sine"
    reference_depth: float = 1.0
    reference_velocity: float = 0.0
    length: float = 1.0
    radius: float | None = None

    def __post_init__(self):
        if not self.gravity > 0:
            raise ValueError(f"gravity must be > 0, got {self.gravity}")
        if self.friction < 0:
            raise ValueError(f"friction must be >= 0, got {self.friction}")
        if not self.reference_depth > 0:
            raise ValueError(f"reference depth must be > 0, got {self.reference_depth}")
        if self.slope_profile not in ("constant", "sine"):
            raise ValueError(f"unknown slope profile {self.slope_profile!r}")

    def bottom_slope(self, x):
        if self.slope_profile == "constant":
            return self.slope_amplitude * np.ones_like(np.asarray(x, dtype=float))
        return self.slope_amplitude * np.sin(2.0 * np.pi * np.asarray(x, dtype=float) / self.length)


@dataclass(frozen=True)
class SavageHutterParams:
    """Inclined-bottom parameters: gravity and the bottom angle profile.

    The Riemann-invariant transform freezes cos(theta) at the reference angle
    theta(0); this is the small-angle approximation the model itself assumes.
    """

    gravity: float = 9.81
    angle_amplitude: float = 0.0
    angle_profile: str = "constant"
    reference_depth: float = 1.0
    reference_velocity: float = 0.0
    length: float = 1.0
    radius: float | None = None

    def __post_init__(self):
        if not self.gravity > 0:
            raise ValueError(f"gravity must be > 0, got {self.gravity}")
        if not self.reference_depth > 0:
            raise ValueError(f"reference depth must be > 0, got {self.reference_depth}")
        if self.angle_profile not in ("constant", "sine"):
            raise ValueError(f"unknown angle profile {self.angle_profile!r}")
        if abs(self.angle_amplitude) >= math.pi / 2:
            raise ValueError("bottom angle must stay below pi/2 in magnitude")

    def angle(self, x):
        if self.angle_profile == "constant":
            return self.angle_amplitude * np.ones_like(np.asarray(x, dtype=float))
        return self.angle_amplitude * np.sin(2.0 * np.pi * np.asarray(x, dtype=float) / self.length)

    @property
    def theta_ref(self) -> float:
        return float(self.angle(0.0))


def sv_to_riemann(H, V, gravity: float):
    """Map (depth, velocity) to the Riemann invariants (u, v).

    u = V + 2 sqrt(g H), v = V - 2 sqrt(g H); requires H > 0.
    """
    H = np.asarray(H, dtype=float)
    V = np.asarray(V, dtype=float)
    if np.any(H <= 0):
        raise ValueError("depth H must be > 0")
    root = 2.0 * np.sqrt(gravity * H)
    u, v = V + root, V - root
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def sv_from_riemann(u, v, gravity: float):
    """Invert the Riemann map: H = (u-v)^2 / (16 g), V = (u+v)/2; needs u > v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u <= v):
        raise ValueError("invalid state: u must exceed v (vacuum at u == v)")
    H = (u - v) ** 2 / (16.0 * gravity)
    V = 0.5 * (u + v)
    if H.ndim == 0:
        return float(H), float(V)
    return H, V


def _lam(u, v):
    return (3.0 * u + v) / 4.0


def _mu(u, v):
    return -(u + 3.0 * v) / 4.0


def _d_lam(u, v):
    shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
    return 0.75 * np.ones(shape), 0.25 * np.ones(shape)


def _d_mu(u, v):
    shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
    return -0.25 * np.ones(shape), -0.75 * np.ones(shape)


def _default_radius(lam0: float, mu0: float) -> float:
    # Speeds are linear in (u, v) with gradient norm sqrt(10)/4; this radius
    # keeps them above min(lam0, mu0)/2 on the closed 2R-ball.
    return min(lam0, mu0) / math.sqrt(10.0)


def _split_spec(name, F, dF, eps, u_bar, v_bar, radius, metadata):
    """Package a one-source system (both densities equal F) with its split."""
    if eps > 0.0:
        def f(x, u, v):
            return F(x, u, v) / eps

        def d_f(x, u, v):
            fu, fv = dF(x, u, v)
            return fu / eps, fv / eps
    else:
        def f(x, u, v):
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape)

        def d_f(x, u, v):
            z = np.zeros(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape)
            return z, z

    lam0 = float(_lam(u_bar, v_bar))
    mu0 = float(_mu(u_bar, v_bar))
    if not (lam0 > 0 and mu0 > 0):
        raise ValueError(
            f"reference state is not subcritical: wave speeds {lam0}, {mu0}"
        )
    if radius is None:
        radius = _default_radius(lam0, mu0)
    c = min(lam0, mu0) - math.sqrt(10.0) / 2.0 * radius
    if not c > 0:
        raise ValueError(f"radius {radius} too large: speed floor {c} <= 0")
    spec = SystemSpec(
        lam=_lam, mu=_mu, f=f, g=f,
        u_bar=u_bar, v_bar=v_bar, radius=radius, c=c,
        d_lam=_d_lam, d_mu=_d_mu, d_f=d_f, d_g=d_f,
        name=name, metadata=metadata,
    )
    return spec, eps


def sv_system(params: SaintVenantParams):
    """Saint-Venant system in Riemann invariants, with the amplitude split.

    Source density F(x, u, v) = -g b'(x) - 2 c_f g ((u+v)/(u-v))^2 acts on
    both characteristic families; epsilon = sup|b'| + c_f and f = F / epsilon.
    Returns (SystemSpec, epsilon).
    """
    g = params.gravity
    cf = params.friction
    xs = np.linspace(0.0, params.length, _SUP_SAMPLES)
    slope_sup = float(np.max(np.abs(params.bottom_slope(xs))))
    eps = slope_sup + cf

    def F(x, u, v):
        r = (u + v) / (u - v)
        return -g * params.bottom_slope(x) - 2.0 * cf * g * r * r + 0.0 * u

    def dF(x, u, v):
        r = (u + v) / (u - v)
        d = (u - v) ** 2
        return (
            -2.0 * cf * g * 2.0 * r * (-2.0 * v) / d + 0.0 * x,
            -2.0 * cf * g * 2.0 * r * (2.0 * u) / d + 0.0 * x,
        )

    u_bar, v_bar = sv_to_riemann(params.reference_depth, params.reference_velocity, g)
    metadata = {
        "model": "saint_venant",
        "epsilon_split": "sup_slope_plus_friction",
        "gravity": g,
        "friction": cf,
        "slope_amplitude": params.slope_amplitude,
        "slope_profile": params.slope_profile,
    }
    return _split_spec("saint_venant", F, dF, eps, u_bar, v_bar, params.radius, metadata)


def sh_system(params: SavageHutterParams):
    """Savage-Hutter system with frozen reference angle, plus the split.

    Source density F(x) = -g sin(theta(x)); epsilon = g sup|sin(theta)|.
    Returns (SystemSpec, epsilon).
    """
    g = params.gravity
    xs = np.linspace(0.0, params.length, _SUP_SAMPLES)
    eps = float(g * np.max(np.abs(np.sin(params.angle(xs)))))

    def F(x, u, v):
        return -g * np.sin(params.angle(x)) + 0.0 * np.asarray(u, dtype=float)

    def dF(x, u, v):
        z = np.zeros(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape)
        return z, z

    g_eff = g * math.cos(params.theta_ref)
    u_bar, v_bar = sv_to_riemann(params.reference_depth, params.reference_velocity, g_eff)
    metadata = {
        "model": "savage_hutter",
        "epsilon_split": "gravity_sup_sin_angle",
        "gravity": g,
        "angle_amplitude": params.angle_amplitude,
        "angle_profile": params.angle_profile,
        "theta_ref": params.theta_ref,
    }
    return _split_spec("savage_hutter", F, dF, eps, u_bar, v_bar, params.radius, metadata)


# ---------------------------------------------------------------------------
# Built-in custom test families
# ---------------------------------------------------------------------------

def _zeros(x, u, v):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape)


def _zero_pair(x, u, v):
    z = _zeros(x, u, v)
    return z, z


def custom_system(family: str, speed: float = 1.0, radius: float = 1.0) -> SystemSpec:
    """Named test families used throughout the test and demo suites.

    constant:      lam = mu = speed, f = g = 1
    linear_source: lam = mu = speed, f = v, g = u   (the coupled pair
                   matching the linear sharpness benchmark)
    arctan_speed:  lam = 1 + u^2, mu = 1, f = 1, g = 0 (separable steady ODE
                   with closed-form antiderivative)
    """
    if family == "constant":
        return SystemSpec(
            lam=lambda u, v: speed * np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape),
            mu=lambda u, v: speed * np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape),
            f=lambda x, u, v: np.ones(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape),
            g=lambda x, u, v: np.ones(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape),
            u_bar=0.0, v_bar=0.0, radius=radius, c=speed,
            d_lam=lambda u, v: _zero_pair(0.0, u, v),
            d_mu=lambda u, v: _zero_pair(0.0, u, v),
            d_f=_zero_pair, d_g=_zero_pair,
            name="constant", metadata={"family": "constant", "speed": speed},
        )
    if family == "linear_source":
        return SystemSpec(
            lam=lambda u, v: speed * np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape),
            mu=lambda u, v: speed * np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape),
            f=lambda x, u, v: np.asarray(v, dtype=float) + 0.0 * np.asarray(x) + 0.0 * np.asarray(u),
            g=lambda x, u, v: np.asarray(u, dtype=float) + 0.0 * np.asarray(x) + 0.0 * np.asarray(v),
            u_bar=0.0, v_bar=0.0, radius=radius, c=speed,
            d_lam=lambda u, v: _zero_pair(0.0, u, v),
            d_mu=lambda u, v: _zero_pair(0.0, u, v),
            d_f=lambda x, u, v: (_zeros(x, u, v), _zeros(x, u, v) + 1.0),
            d_g=lambda x, u, v: (_zeros(x, u, v) + 1.0, _zeros(x, u, v)),
            name="linear_source", metadata={"family": "linear_source", "speed": speed},
        )
    if family == "arctan_speed":
        return SystemSpec(
            lam=lambda u, v: 1.0 + np.asarray(u, dtype=float) ** 2 + 0.0 * np.asarray(v),
            mu=lambda u, v: np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape),
            f=lambda x, u, v: np.ones(np.broadcast(np.asarray(x), np.asarray(u), np.asarray(v)).shape),
            g=_zeros,
            u_bar=0.0, v_bar=0.0, radius=radius, c=1.0,
            d_lam=lambda u, v: (2.0 * np.asarray(u, dtype=float) + 0.0 * np.asarray(v), _zeros(0.0, u, v)),
            d_mu=lambda u, v: _zero_pair(0.0, u, v),
            d_f=_zero_pair, d_g=_zero_pair,
            name="arctan_speed", metadata={"family": "arctan_speed"},
        )
    raise ValueError(f"unknown custom family {family!r}")


# ---------------------------------------------------------------------------
# Config dispatch
# ---------------------------------------------------------------------------

def build_system(config: RunConfig) -> tuple[SystemSpec, float]:
    """Build the configured system; returns (spec, epsilon).

    For the model systems epsilon comes from the amplitude split; for the
    custom families it is the configured run.epsilon.
    """
    kind = config.system_kind
    p = config.system_params
    if kind == "custom":
        spec = custom_system(p["family"], speed=float(p.get("speed", 1.0)),
                             radius=float(p.get("radius", 1.0)))
        return spec, float(config.epsilon)
    if kind == "saint_venant":
        params = SaintVenantParams(
            gravity=float(p["gravity"]), friction=float(p["friction"]),
            slope_amplitude=float(p["slope_amplitude"]),
            slope_profile=p["slope_profile"],
            reference_depth=float(p["reference_depth"]),
            reference_velocity=float(p["reference_velocity"]),
            length=config.length,
            radius=None if p.get("radius") is None else float(p["radius"]),
        )
        return sv_system(params)
    if kind == "savage_hutter":
        params = SavageHutterParams(
            gravity=float(p["gravity"]),
            angle_amplitude=float(p["angle_amplitude"]),
            angle_profile=p["angle_profile"],
            reference_depth=float(p["reference_depth"]),
            reference_velocity=float(p["reference_velocity"]),
            length=config.length,
            radius=None if p.get("radius") is None else float(p["radius"]),
        )
        return sh_system(params)
    raise ConfigError([f"unknown system kind {kind!r}"])


def with_epsilon(config: RunConfig, eps: float) -> RunConfig:
    """Rebuild a config so the built system carries source amplitude ``eps``.

    Custom families take it directly; the model systems scale their source
    parameters so the amplitude split lands on ``eps``.
    """
    if eps < 0:
        raise ValueError(f"epsilon must be >= 0, got {eps}")
    kind = config.system_kind
    if kind == "custom":
        return replace(config, epsilon=float(eps))
    p = dict(config.system_params)
    if kind == "saint_venant":
        base = abs(p["slope_amplitude"]) + p["friction"]
        if base == 0.0:
            p["slope_amplitude"] = eps  # sup|b'| = amplitude for both profiles
        else:
            scale = eps / base
            p["slope_amplitude"] = p["slope_amplitude"] * scale
            p["friction"] = p["friction"] * scale
        return replace(config, system_params=p)
    if kind == "savage_hutter":
        target = eps / p["gravity"]
        if not target < 1.0:
            raise ValueError(f"epsilon {eps} exceeds the reachable range for savage_hutter")
        p["angle_amplitude"] = math.copysign(math.asin(target), p["angle_amplitude"] or 1.0)
        return replace(config, system_params=p)
    raise ConfigError([f"unknown system kind {kind!r}"])
