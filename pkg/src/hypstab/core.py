"""Shared domain types: grids, quadrature, system coefficients, run configuration.

Everything here is immutable after construction and safe to share across
concurrent tasks; the operations are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "HypstabError",
    "ConfigError",
    "BallExitError",
    "ConvergenceError",
    "TransportError",
    "MembershipError",
    "Grid",
    "ProfilePair",
    "SystemSpec",
    "RunConfig",
    "quadrature",
    "cumulative_quadrature",
    "fd_partial",
    "validate_config",
]


class HypstabError(Exception):
    """Base class for solver errors."""


class ConfigError(HypstabError):
    """Invalid configuration document; carries every violated constraint."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class BallExitError(HypstabError):
    """An iterate left the admissible ball around the reference state."""


class ConvergenceError(HypstabError):
    """An iteration hit its step budget without meeting its tolerance."""


class TransportError(HypstabError):
    """Characteristic tracing failed (bounding box or root bracketing)."""


class MembershipError(HypstabError):
    """A trajectory iterate violated its amplitude or Lipschitz bound."""


# ---------------------------------------------------------------------------
# Grid and quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_cells`` cells on ``[0, length]`` with n_cells+1 nodes."""

    length: float
    n_cells: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"grid length must be > 0, got {self.length}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")
        nodes = np.linspace(0.0, self.length, self.n_cells + 1)
        nodes.flags.writeable = False
        object.__setattr__(self, "_nodes", nodes)

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def h(self) -> float:
        return self.length / self.n_cells


def quadrature(samples: np.ndarray, grid: Grid, axis: int = -1) -> np.ndarray | float:
    """Composite trapezoid approximation of the integral over ``[0, length]``.

    ``samples`` must carry ``n_cells + 1`` values along ``axis``, aligned with
    the grid nodes.  Exact on affine integrands, O(h^2) otherwise, and the
    weights are positive so the result of integrating a nonnegative integrand
    is nonnegative.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[axis] != grid.n_cells + 1:
        raise ValueError(
            f"expected {grid.n_cells + 1} samples along axis {axis}, "
            f"got {samples.shape[axis]}"
        )
    s = np.moveaxis(samples, axis, -1)
    out = grid.h * (s[..., 1:-1].sum(axis=-1) + 0.5 * (s[..., 0] + s[..., -1]))
    return float(out) if out.ndim == 0 else out


def cumulative_quadrature(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """Cumulative trapezoid sums ``x -> integral_0^x`` at the grid nodes."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != grid.n_cells + 1:
        raise ValueError(
            f"expected {grid.n_cells + 1} samples, got {samples.shape[-1]}"
        )
    chunks = 0.5 * grid.h * (samples[..., 1:] + samples[..., :-1])
    out = np.zeros_like(samples)
    np.cumsum(chunks, axis=-1, out=out[..., 1:])
    return out


# ---------------------------------------------------------------------------
# Profiles and system coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfilePair:
    """A pair of profiles sampled on the nodes of one grid."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError(f"profiles must be 1-d arrays of equal length, got {u.shape} and {v.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def check_grid(self, grid: Grid) -> None:
        if self.u.shape[0] != grid.n_cells + 1:
            raise ValueError(
                f"profiles carry {self.u.shape[0]} samples but grid has {grid.n_cells + 1} nodes"
            )

    def max_offset(self, u_ref: float, v_ref: float) -> float:
        """Largest Euclidean distance of ``(u(x), v(x))`` from ``(u_ref, v_ref)``."""
        return float(np.sqrt((self.u - u_ref) ** 2 + (self.v - v_ref) ** 2).max())


def fd_partial(fn: Callable, arg_index: int, n_args: int) -> Callable:
    """Central finite difference of ``fn`` in one argument.

    Step 1e-6 * (1 + |argument|), matching the default used whenever explicit
    derivatives of the coefficient functions are not supplied.
    """

    def d(*args):
        args = [np.asarray(a, dtype=float) for a in args]
        if len(args) != n_args:
            raise TypeError(f"expected {n_args} arguments, got {len(args)}")
        step = 1e-6 * (1.0 + np.abs(args[arg_index]))
        hi = list(args)
        lo = list(args)
        hi[arg_index] = args[arg_index] + step
        lo[arg_index] = args[arg_index] - step
        return (fn(*hi) - fn(*lo)) / (2.0 * step)

    return d


@dataclass(frozen=True)
class SystemSpec:
    """Wave speeds and source densities of one 2x2 balance-law system.

    ``lam`` and ``mu`` map states ``(u, v)`` to the two wave speeds; ``f`` and
    ``g`` map ``(x, u, v)`` to the source densities (the explicit ``x``
    dependence carries e.g. a bottom profile).  Both speeds must stay at or
    above the floor ``c`` on the closed ball of radius ``2 * radius`` around
    the reference state.

    Explicit first derivatives with respect to ``(u, v)`` may be supplied as
    ``d_lam``/``d_mu``/``d_f``/``d_g`` (each returning the pair of partials);
    otherwise central finite differences with step 1e-6 * (1 + |arg|) are used.
    """

    lam: Callable
    mu: Callable
    f: Callable
    g: Callable
    u_bar: float
    v_bar: float
    radius: float
    c: float
    d_lam: Callable | None = None
    d_mu: Callable | None = None
    d_f: Callable | None = None
    d_g: Callable | None = None
    name: str = "custom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not self.c > 0:
            raise ValueError(f"speed floor c must be > 0, got {self.c}")
        lam0 = float(self.lam(self.u_bar, self.v_bar))
        mu0 = float(self.mu(self.u_bar, self.v_bar))
        if not (lam0 > 0 and mu0 > 0):
            raise ValueError(
                f"wave speeds at the reference state must be positive, got "
                f"lam={lam0}, mu={mu0}"
            )

    def lam_partials(self, u, v):
        if self.d_lam is not None:
            return self.d_lam(u, v)
        return (fd_partial(self.lam, 0, 2)(u, v), fd_partial(self.lam, 1, 2)(u, v))

    def mu_partials(self, u, v):
        if self.d_mu is not None:
            return self.d_mu(u, v)
        return (fd_partial(self.mu, 0, 2)(u, v), fd_partial(self.mu, 1, 2)(u, v))

    def f_partials(self, x, u, v):
        if self.d_f is not None:
            return self.d_f(x, u, v)
        return (fd_partial(self.f, 1, 3)(x, u, v), fd_partial(self.f, 2, 3)(x, u, v))

    def g_partials(self, x, u, v):
        if self.d_g is not None:
            return self.d_g(x, u, v)
        return (fd_partial(self.g, 1, 3)(x, u, v), fd_partial(self.g, 2, 3)(x, u, v))

    def check_speed_floor(self, n_samples: int = 10_000, seed: int = 1234) -> float:
        """Sample the closed 2R-ball; raise if any speed comes out below c.

        Returns the smallest sampled speed.
        """
        rng = np.random.default_rng(seed)
        r = 2.0 * self.radius * np.sqrt(rng.random(n_samples))
        phi = 2.0 * np.pi * rng.random(n_samples)
        u = self.u_bar + r * np.cos(phi)
        v = self.v_bar + r * np.sin(phi)
        speeds = np.minimum(self.lam(u, v), self.mu(u, v))
        worst = float(np.min(speeds))
        if worst < self.c:
            raise ValueError(
                f"speed floor violated: sampled min speed {worst} < c={self.c} "
                f"inside the 2R-ball (R={self.radius})"
            )
        return worst

    def source_sup(self, grid: Grid, amplitude: float | None = None) -> tuple[float, float]:
        """Sampled sup of |f| and |g| over nodes x (amplitude-ball in state)."""
        a = self.radius if amplitude is None else amplitude
        offsets = np.linspace(-a, a, 9)
        du, dv = np.meshgrid(offsets, offsets, indexing="ij")
        x = grid.nodes[:, None, None]
        u = self.u_bar + du[None, :, :]
        v = self.v_bar + dv[None, :, :]
        fs = np.abs(self.f(x, u, v) + np.zeros_like(x + u))
        gs = np.abs(self.g(x, u, v) + np.zeros_like(x + u))
        return float(fs.max()), float(gs.max())


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_CUSTOM_FAMILIES = ("constant", "linear_source", "arctan_speed")
_SYSTEM_KINDS = ("saint_venant", "savage_hutter", "custom")
_INITIAL_KINDS = ("cosine", "interior_bump", "equilibrium")

# Per-section known keys; anything else in the document is rejected.
_SYSTEM_KEYS = {
    "custom": {"kind", "family", "speed", "radius"},
    "saint_venant": {
        "kind", "gravity", "friction", "slope_amplitude", "slope_profile",
        "reference_depth", "reference_velocity", "radius",
    },
    "savage_hutter": {
        "kind", "gravity", "angle_amplitude", "angle_profile",
        "reference_depth", "reference_velocity", "radius",
    },
}
_FEEDBACK_KEYS = {"gain", "exponent"}
_GRID_KEYS = {"length", "n_cells"}
_RUN_KEYS = {
    "epsilon", "delta", "initial", "t_final", "output_dt",
    "steady_tol", "steady_max_iter", "picard_tol", "picard_max_iter",
    "seed", "amplitude_bound", "lipschitz_bound",
}
_OUTPUT_KEYS = {"dir", "snapshot_times"}
_SWEEP_KEYS = {"epsilons"}
_SPECTRAL_KEYS = {"grid_size", "epsilons"}
_SECTIONS = {"system", "feedback", "grid", "run", "output", "sweep", "spectral"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters, defaults applied."""

    system_kind: str
    system_params: dict
    gain: float
    exponent: float
    length: float
    n_cells: int
    epsilon: float | None
    delta: float
    initial: str
    t_final: float
    output_dt: float
    steady_tol: float
    steady_max_iter: int
    picard_tol: float
    picard_max_iter: int
    seed: int
    amplitude_bound: float | None
    lipschitz_bound: float | None
    output_dir: str
    snapshot_times: tuple
    sweep_epsilons: tuple | None
    spectral_grid_size: int
    spectral_epsilons: tuple

    @property
    def grid(self) -> Grid:
        return Grid(self.length, self.n_cells)


def _get(section: dict, key: str, default, problems: list, where: str, kind=float):
    raw = section.get(key, default)
    if raw is None:
        return None
    try:
        if kind is int:
            val = int(raw)
            if val != float(raw):
                raise ValueError
            return val
        if kind is float:
            return float(raw)
        return raw
    except (TypeError, ValueError):
        problems.append(f"{where}.{key}: expected {kind.__name__}, got {raw!r}")
        return default


def validate_config(raw: dict) -> RunConfig:
    """Validate a parsed configuration document and apply defaults.

    Raises ConfigError listing every violated constraint; unknown sections or
    keys are violations too.
    """
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["configuration document must be a mapping"])

    for key in raw:
        if key not in _SECTIONS:
            problems.append(f"unknown section {key!r}")

    system = raw.get("system", {})
    feedback = raw.get("feedback", {})
    grid_sec = raw.get("grid", {})
    run = raw.get("run", {})
    output = raw.get("output", {})
    sweep = raw.get("sweep", {})
    spectral = raw.get("spectral", {})
    for name, sec in (("system", system), ("feedback", feedback), ("grid", grid_sec),
                      ("run", run), ("output", output), ("sweep", sweep),
                      ("spectral", spectral)):
        if not isinstance(sec, dict):
            problems.append(f"section {name!r} must be a mapping")
            raise ConfigError(problems)

    # --- system ---
    kind = system.get("kind")
    if kind is None:
        problems.append("system.kind: required (one of %s)" % ", ".join(_SYSTEM_KINDS))
        kind = "custom"
    elif kind not in _SYSTEM_KINDS:
        problems.append(f"system.kind: {kind!r} not one of {_SYSTEM_KINDS}")
        kind = "custom"
    known = _SYSTEM_KEYS[kind]
    for key in system:
        if key not in known:
            problems.append(f"system.{key}: unknown key for kind {kind!r}")
    system_params = {k: v for k, v in system.items() if k != "kind" and k in known}
    if kind == "custom":
        family = system_params.setdefault("family", "constant")
        if family not in _CUSTOM_FAMILIES:
            problems.append(f"system.family: {family!r} not one of {_CUSTOM_FAMILIES}")
        speed = _get(system_params, "speed", 1.0, problems, "system")
        if speed is not None and not speed > 0:
            problems.append(f"system.speed: must be > 0, got {speed}")
        system_params["speed"] = speed
        system_params.setdefault("radius", 1.0)
    elif kind == "saint_venant":
        system_params.setdefault("gravity", 9.81)
        system_params.setdefault("friction", 0.0)
        system_params.setdefault("slope_amplitude", 0.0)
        system_params.setdefault("slope_profile", "sine")
        system_params.setdefault("reference_depth", 1.0)
        system_params.setdefault("reference_velocity", 0.0)
        if not float(system_params["gravity"]) > 0:
            problems.append("system.gravity: must be > 0")
        if float(system_params["friction"]) < 0:
            problems.append("system.friction: must be >= 0")
        if not float(system_params["reference_depth"]) > 0:
            problems.append("system.reference_depth: must be > 0")
    elif kind == "savage_hutter":
        system_params.setdefault("gravity", 9.81)
        system_params.setdefault("angle_amplitude", 0.0)
        system_params.setdefault("angle_profile", "constant")
        system_params.setdefault("reference_depth", 1.0)
        system_params.setdefault("reference_velocity", 0.0)
        if not float(system_params["gravity"]) > 0:
            problems.append("system.gravity: must be > 0")
        if not float(system_params["reference_depth"]) > 0:
            problems.append("system.reference_depth: must be > 0")

    # --- feedback ---
    for key in feedback:
        if key not in _FEEDBACK_KEYS:
            problems.append(f"feedback.{key}: unknown key")
    gain = _get(feedback, "gain", 1.0, problems, "feedback")
    if gain is not None and not gain > 0:
        problems.append(f"feedback.gain: must be > 0, got {gain}")
    exponent = _get(feedback, "exponent", 0.5, problems, "feedback")
    if exponent is not None and not 0.0 < exponent < 1.0:
        problems.append(
            f"feedback.exponent: must lie strictly inside (0, 1), got {exponent}"
        )

    # --- grid ---
    for key in grid_sec:
        if key not in _GRID_KEYS:
            problems.append(f"grid.{key}: unknown key")
    length = _get(grid_sec, "length", 1.0, problems, "grid")
    if length is not None and not length > 0:
        problems.append(f"grid.length: must be > 0, got {length}")
    if "n_cells" not in grid_sec:
        problems.append("grid.n_cells: required (positive integer)")
        n_cells = 100
    else:
        n_cells = _get(grid_sec, "n_cells", 100, problems, "grid", kind=int)
        if n_cells is not None and n_cells < 1:
            problems.append(f"grid.n_cells: must be a positive integer, got {n_cells}")
            n_cells = 100

    # --- run ---
    for key in run:
        if key not in _RUN_KEYS:
            problems.append(f"run.{key}: unknown key")
    epsilon = _get(run, "epsilon", None, problems, "run")
    if epsilon is not None:
        if epsilon < 0:
            problems.append(f"run.epsilon: must be >= 0, got {epsilon}")
        if kind != "custom":
            problems.append(
                "run.epsilon: derived from the source split for kind "
                f"{kind!r}; remove it from the document"
            )
    elif kind == "custom":
        epsilon = 0.0
    delta = _get(run, "delta", 0.01, problems, "run")
    if delta is not None and delta < 0:
        problems.append(f"run.delta: must be >= 0, got {delta}")
    initial = run.get("initial", "cosine")
    if initial not in _INITIAL_KINDS:
        problems.append(f"run.initial: {initial!r} not one of {_INITIAL_KINDS}")
        initial = "cosine"
    if "t_final" not in run:
        problems.append("run.t_final: required (positive final time)")
        t_final = 1.0
    else:
        t_final = _get(run, "t_final", 1.0, problems, "run")
        if t_final is not None and not t_final > 0:
            problems.append(f"run.t_final: must be > 0, got {t_final}")
            t_final = 1.0
    output_dt = _get(run, "output_dt", 0.01, problems, "run")
    tols = {}
    for key, default in (("steady_tol", 1e-12), ("picard_tol", 1e-10)):
        val = _get(run, key, default, problems, "run")
        if val is not None and not val > 0:
            problems.append(f"run.{key}: must be > 0, got {val}")
            val = default
        tols[key] = val
    if output_dt is not None and not output_dt > 0:
        problems.append(f"run.output_dt: must be > 0, got {output_dt}")
        output_dt = 0.01
    steady_max_iter = _get(run, "steady_max_iter", 200, problems, "run", kind=int)
    picard_max_iter = _get(run, "picard_max_iter", 50, problems, "run", kind=int)
    for key, val in (("steady_max_iter", steady_max_iter), ("picard_max_iter", picard_max_iter)):
        if val is not None and val < 1:
            problems.append(f"run.{key}: must be >= 1, got {val}")
    seed = _get(run, "seed", 0, problems, "run", kind=int)
    amplitude_bound = _get(run, "amplitude_bound", None, problems, "run")
    lipschitz_bound = _get(run, "lipschitz_bound", None, problems, "run")
    for key, val in (("amplitude_bound", amplitude_bound), ("lipschitz_bound", lipschitz_bound)):
        if val is not None and not val > 0:
            problems.append(f"run.{key}: must be > 0 when given, got {val}")

    # --- output ---
    for key in output:
        if key not in _OUTPUT_KEYS:
            problems.append(f"output.{key}: unknown key")
    out_dir = output.get("dir", "out")
    snapshot_times = output.get("snapshot_times", [])
    if not isinstance(snapshot_times, (list, tuple)):
        problems.append("output.snapshot_times: must be a list of times")
        snapshot_times = []

    # --- sweep / spectral ---
    for key in sweep:
        if key not in _SWEEP_KEYS:
            problems.append(f"sweep.{key}: unknown key")
    sweep_eps = sweep.get("epsilons")
    if sweep_eps is not None:
        if not isinstance(sweep_eps, (list, tuple)) or not sweep_eps:
            problems.append("sweep.epsilons: must be a nonempty list")
            sweep_eps = None
        else:
            sweep_eps = tuple(float(e) for e in sweep_eps)
    for key in spectral:
        if key not in _SPECTRAL_KEYS:
            problems.append(f"spectral.{key}: unknown key")
    spectral_n = _get(spectral, "grid_size", 256, problems, "spectral", kind=int)
    if spectral_n is not None and spectral_n < 2:
        problems.append(f"spectral.grid_size: must be >= 2, got {spectral_n}")
        spectral_n = 256
    spectral_eps = tuple(float(e) for e in spectral.get("epsilons", (1e-3, 1e-4, 1e-6)))

    if problems:
        raise ConfigError(problems)

    return RunConfig(
        system_kind=kind,
        system_params=system_params,
        gain=gain,
        exponent=exponent,
        length=length,
        n_cells=n_cells,
        epsilon=epsilon,
        delta=delta,
        initial=initial,
        t_final=t_final,
        output_dt=output_dt,
        steady_tol=tols["steady_tol"],
        steady_max_iter=steady_max_iter,
        picard_tol=tols["picard_tol"],
        picard_max_iter=picard_max_iter,
        seed=seed,
        amplitude_bound=amplitude_bound,
        lipschitz_bound=lipschitz_bound,
        output_dir=str(out_dir),
        snapshot_times=tuple(float(t) for t in snapshot_times),
        sweep_epsilons=sweep_eps,
        spectral_grid_size=spectral_n,
        spectral_epsilons=spectral_eps,
    )
