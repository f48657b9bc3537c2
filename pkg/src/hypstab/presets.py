"""Canonical shipped run definitions.

The JSON files under configs/ mirror these dictionaries exactly (a test keeps
them in sync); demos and the verification suite build their runs from here so
every published number traces back to one place.
"""
from __future__ import annotations

from .core import RunConfig, validate_config

__all__ = ["preset", "preset_document", "PRESET_NAMES", "NONLINEAR_PRESETS"]


def _constant_extinction() -> dict:
    return {
        "system": {"kind": "custom", "family": "constant", "speed": 1.0, "radius": 1.0},
        "feedback": {"gain": 1.0, "exponent": 0.5},
        "grid": {"length": 1.0, "n_cells": 400},
        "run": {"epsilon": 0.0, "delta": 0.01, "initial": "cosine",
                "t_final": 2.0, "output_dt": 0.01},
        "output": {"dir": "out/constant_extinction"},
    }


def _saint_venant() -> dict:
    # Split amplitude: sup|b'| + c_f = 0.005 + 0.005 = 0.01.
    return {
        "system": {"kind": "saint_venant", "gravity": 9.81, "friction": 0.005,
                   "slope_amplitude": 0.005, "slope_profile": "sine",
                   "reference_depth": 1.0, "reference_velocity": 0.0},
        "feedback": {"gain": 1.0, "exponent": 0.5},
        "grid": {"length": 1.0, "n_cells": 200},
        "run": {"delta": 0.01, "initial": "cosine", "t_final": 2.0,
                "output_dt": 0.01},
        "output": {"dir": "out/saint_venant",
                   "snapshot_times": [0.0, 0.25, 0.5, 1.0]},
    }


def _linear_source() -> dict:
    return {
        "system": {"kind": "custom", "family": "linear_source", "speed": 1.0,
                   "radius": 1.0},
        "feedback": {"gain": 1.0, "exponent": 0.5},
        "grid": {"length": 1.0, "n_cells": 200},
        "run": {"epsilon": 0.001, "delta": 0.01, "initial": "cosine",
                "t_final": 2.5, "output_dt": 0.01},
        "output": {"dir": "out/linear_source"},
    }


def _linear_sweep() -> dict:
    doc = _linear_source()
    doc["sweep"] = {"epsilons": [0.01, 0.001, 0.0001]}
    doc["output"] = {"dir": "out/linear_sweep"}
    return doc


def _spectral_ladder() -> dict:
    return {
        "system": {"kind": "custom", "family": "linear_source", "speed": 1.0},
        "feedback": {"gain": 1.0, "exponent": 0.5},
        "grid": {"length": 1.0, "n_cells": 200},
        "run": {"epsilon": 0.001, "t_final": 2.5},
        "spectral": {"grid_size": 256, "epsilons": [0.001, 0.0001, 1e-06]},
        "output": {"dir": "out/spectral_ladder"},
    }


def _arctan_steady() -> dict:
    return {
        "system": {"kind": "custom", "family": "arctan_speed", "radius": 1.0},
        "feedback": {"gain": 1.0, "exponent": 0.5},
        "grid": {"length": 1.0, "n_cells": 1000},
        "run": {"epsilon": 0.1, "delta": 0.0, "initial": "equilibrium",
                "t_final": 1.0},
        "output": {"dir": "out/arctan_steady"},
    }


_PRESETS = {
    "constant_extinction": _constant_extinction,
    "saint_venant": _saint_venant,
    "linear_source": _linear_source,
    "linear_sweep": _linear_sweep,
    "spectral_ladder": _spectral_ladder,
    "arctan_steady": _arctan_steady,
}

PRESET_NAMES = tuple(_PRESETS)

# Shipped runs with a nonzero source split (the decay-certificate targets).
NONLINEAR_PRESETS = ("saint_venant", "linear_source")


def preset_document(name: str) -> dict:
    """Raw configuration document of one shipped preset."""
    try:
        return _PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {PRESET_NAMES}") from None


def preset(name: str) -> RunConfig:
    """Validated configuration of one shipped preset."""
    return validate_config(preset_document(name))
