"""Experiment harness: subcommands, epsilon sweeps and CSV emission.

Every output file starts with one metadata header line of key=value pairs
(version, grid, tolerances, split convention) so results stay traceable; all
outputs are deterministic functions of the configuration document.

Exit codes: 0 success, 1 configuration error, 2 solver error, 3 verification
falsification.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .core import ConfigError, HypstabError, RunConfig, validate_config
from .lyapunov import rate_report
from .models import build_system, with_epsilon
from .quasilinear import simulate
from .spectral import ShiftPropagator, eigen_pair, tail_rate
from .steady import solve_steady

__all__ = ["SweepReport", "sweep_epsilon", "run", "main"]


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, meta: dict, columns: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items())]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def _base_meta(config: RunConfig, spec, epsilon: float) -> dict:
    return {
        "version": __version__,
        "system": spec.name,
        "grid_n": config.n_cells,
        "grid_L": config.length,
        "steady_tol": config.steady_tol,
        "picard_tol": config.picard_tol,
        "epsilon": epsilon,
        "eps_split": spec.metadata.get("epsilon_split", "direct"),
        "seed": config.seed,
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    """Per-epsilon decay summaries, rows sorted by epsilon descending."""

    rows: list
    metadata: dict


def _sweep_one(config: RunConfig, eps: float) -> dict:
    row = {"epsilon": eps, "c_eps_certified": math.nan, "slope_fitted": math.nan,
           "slope_window_start": math.nan, "sup_linf": math.nan, "status": "ok"}
    try:
        result = simulate(with_epsilon(config, eps))
        report = rate_report(result)
        row["c_eps_certified"] = result.c_eps
        row["slope_window_start"] = report.fit_window[0]
        row["sup_linf"] = float(result.linf.max())
        if report.status == "extinct":
            row["slope_fitted"] = "extinct"
        elif report.status != "ok":
            row["status"] = report.status
        else:
            row["slope_fitted"] = report.fitted_slope
    except HypstabError as exc:
        row["status"] = f"error: {exc}"
    except ValueError as exc:
        row["status"] = f"error: {exc}"
    return row


def sweep_epsilon(config: RunConfig, epsilons, workers: int = 1) -> SweepReport:
    """Simulate + fit + certify per epsilon; failures stay in their row.

    Rows are computed independently (in parallel when ``workers`` > 1) and
    returned sorted by epsilon descending.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ConfigError(["sweep requires a nonempty epsilon list"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, [config] * len(eps_list), eps_list))
    else:
        rows = [_sweep_one(config, e) for e in eps_list]
    rows.sort(key=lambda r: -r["epsilon"])
    spec, _ = build_system(config)
    meta = _base_meta(config, spec, config.epsilon if config.epsilon is not None else math.nan)
    meta["epsilons"] = ";".join(repr(e) for e in eps_list)
    return SweepReport(rows=rows, metadata=meta)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_steady(config: RunConfig, out: Path) -> int:
    spec, epsilon = build_system(config)
    state = solve_steady(spec, epsilon, config.grid, tol=config.steady_tol,
                         max_iter=config.steady_max_iter)
    meta = _base_meta(config, spec, epsilon)
    meta["iterations"] = state.iteration_count
    meta["residual"] = state.residual
    rows = [{"x": x, "u_bar": u, "v_bar": v}
            for x, u, v in zip(config.grid.nodes, state.u, state.v)]
    _write_csv(out / "steady.csv", meta, ["x", "u_bar", "v_bar"], rows)
    print(f"steady: converged in {state.iteration_count} iterations, "
          f"wrote {out / 'steady.csv'}")
    return 0


def _cmd_simulate(config: RunConfig, out: Path) -> int:
    result = simulate(config)
    meta = _base_meta(config, result.spec, result.epsilon)
    meta.update({"c_tilde": result.c_tilde, "theta": result.theta,
                 "c_eps": result.c_eps, "kappa": result.kappa,
                 "windows": result.window_count})
    rows = [{"t": t, "l2_norm": a, "linf_norm": b, "lyapunov": c,
             "y_l_offset": d, "y_r_offset": e}
            for t, a, b, c, d, e in zip(result.times, result.l2, result.linf,
                                        result.lyapunov, result.y_left, result.y_right)]
    _write_csv(out / "simulate.csv", meta,
               ["t", "l2_norm", "linf_norm", "lyapunov", "y_l_offset", "y_r_offset"],
               rows)
    for t_snap in config.snapshot_times:
        idx = int(np.argmin(np.abs(result.times - t_snap)))
        pair = result.reconstructed(idx)
        srows = [{"x": x, "u": u, "v": v, "offset_u": du, "offset_v": dv}
                 for x, u, v, du, dv in zip(
                     config.grid.nodes, pair.u, pair.v,
                     result.trajectory.U[idx], result.trajectory.V[idx])]
        smeta = dict(meta)
        smeta["t"] = float(result.times[idx])
        _write_csv(out / f"snapshot_t{result.times[idx]:.6f}.csv", smeta,
                   ["x", "u", "v", "offset_u", "offset_v"], srows)
    print(f"simulate: {len(result.times)} output times, wrote {out / 'simulate.csv'}")
    return 0


def _cmd_rates(config: RunConfig, out: Path) -> int:
    result = simulate(config)
    report = rate_report(result)
    meta = _base_meta(config, result.spec, result.epsilon)
    row = {"epsilon": report.epsilon, "theta": report.theta, "c_eps": report.c_eps,
           "kappa": report.kappa, "fitted_slope": report.fitted_slope,
           "window_start": report.fit_window[0], "window_end": report.fit_window[1],
           "status": report.status}
    _write_csv(out / "rates.csv", meta, list(row), [row])
    width = max(len(k) for k in row)
    for key, value in row.items():
        print(f"{key:<{width}}  {_fmt(value)}")
    return 0


def _cmd_spectral(config: RunConfig, out: Path) -> int:
    spec, _ = build_system(config)
    c = spec.c
    length = config.length
    rows = []
    for eps in config.spectral_epsilons:
        pair = eigen_pair(c, length, eps)
        rate, norms, _window = tail_rate(
            ShiftPropagator(n=config.spectral_grid_size, epsilon=eps, c=c, length=length))
        rows.append({
            "epsilon": eps,
            "alpha": pair.alpha,
            "lambda": pair.lam,
            "rate_ratio": rate / ((c / length) * math.log(1.0 / eps)),
            "fitted_rate": rate,
            "sup_norm": float(norms.max()),
        })
    meta = _base_meta(config, spec, math.nan)
    meta["spectral_grid_size"] = config.spectral_grid_size
    _write_csv(out / "spectral.csv", meta,
               ["epsilon", "alpha", "lambda", "rate_ratio", "fitted_rate", "sup_norm"],
               rows)
    print(f"spectral: {len(rows)} ladder points, wrote {out / 'spectral.csv'}")
    return 0


def _cmd_sweep(config: RunConfig, out: Path, epsilons, workers: int) -> int:
    eps_list = epsilons if epsilons else config.sweep_epsilons
    if not eps_list:
        raise ConfigError(["sweep: provide --epsilons or a sweep.epsilons section"])
    report = sweep_epsilon(config, eps_list, workers=workers)
    _write_csv(out / "sweep.csv", report.metadata,
               ["epsilon", "c_eps_certified", "slope_fitted", "slope_window_start",
                "sup_linf", "status"],
               report.rows)
    print(f"sweep: {len(report.rows)} rows, wrote {out / 'sweep.csv'}")
    return 0


def _cmd_check(out: Path | None) -> int:
    from .acceptance import run_all
    results = run_all(verbose=True)
    if out is not None:
        rows = [{"criterion": r.criterion, "passed": r.passed, "detail": r.detail}
                for r in results]
        _write_csv(out / "check.csv", {"version": __version__},
                   ["criterion", "passed", "detail"], rows)
    return 0 if all(r.passed for r in results) else 3


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise ConfigError([message])


def _load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path!r}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path!r} is not valid JSON: {exc}"]) from exc
    return validate_config(raw)


def run(argv=None) -> int:
    parser = _Parser(prog="hypstab",
                     description="Boundary stabilization laboratory for 2x2 "
                                 "quasilinear balance laws")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("steady", "simulate", "rates", "spectral", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration document")
        p.add_argument("--out", default=None, help="output directory override")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--epsilons", type=float, nargs="+", default=None)
    p_check = sub.add_parser("check")
    p_check.add_argument("--out", default=None, help="write check.csv here")
    args = parser.parse_args(argv)

    if args.command == "check":
        return _cmd_check(None if args.out is None else Path(args.out))

    config = _load_config(args.config)
    out = Path(args.out) if args.out is not None else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "steady":
        return _cmd_steady(config, out)
    if args.command == "simulate":
        return _cmd_simulate(config, out)
    if args.command == "rates":
        return _cmd_rates(config, out)
    if args.command == "spectral":
        return _cmd_spectral(config, out)
    if args.command == "sweep":
        return _cmd_sweep(config, out, args.epsilons, args.workers)
    raise ConfigError([f"unknown subcommand {args.command!r}"])


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except HypstabError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
