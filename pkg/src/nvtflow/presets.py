"""Reproduction presets for the binary and ternary droplet runs.

Droplet sizes and positions are approximations chosen to match the
published figures qualitatively; override them in a config file.
"""
from __future__ import annotations

import copy

from .config import RunConfig, build_config

_PRESETS = {
    "binary_c1c5_310K": {
        "mixture": {"temperature": 310.0, "components": ["methane", "pentane"]},
        "mobility": {"kind": "molar_average", "D": 1.0e-8},
        "scheme": "coupled",
        "grid": {"nx": 40, "ny": 40, "lx_nm": 20.0, "ly_nm": 20.0, "bc": "no_flux"},
        "time": {"dt": 1.0e-12, "steps": 200},
        "C_T": 0.0,
        "viscosity": {"xi": 1.0e-4, "eta": 1.0e-4},
        "initial": {
            "background_kmol_m3": [7.4302, 0.6736],
            "droplets": [{"center_nm": [10.0, 10.0], "size_nm": [10.0, 10.0],
                          "density_kmol_m3": [6.8663, 4.7915]}],
        },
        "output": {"dir": "out/binary_c1c5_310K", "snapshot_every": 40, "energy_every": 1},
    },
    "ternary_c1c5c10_323K": {
        "mixture": {"temperature": 323.0, "components": ["methane", "pentane", "decane"]},
        "mobility": {"kind": "diagonal", "D_i": 3.0e-8},
        "scheme": "componentwise",
        "grid": {"nx": 40, "ny": 40, "lx_nm": 20.0, "ly_nm": 20.0, "bc": "no_flux"},
        "time": {"dt": 1.0e-12, "steps": 1000},
        "C_T": 0.0,
        "viscosity": {"xi": 1.0e-4, "eta": 1.0e-4},
        "initial": {
            "background_kmol_m3": [10.516, 0.770, 0.184],
            "droplets": [
                {"center_nm": [6.5, 10.0], "size_nm": [6.0, 6.0], "density_kmol_m3": [7.8412, 1.9925, 1.433]},
                {"center_nm": [13.5, 10.0], "size_nm": [6.0, 6.0], "density_kmol_m3": [7.8412, 1.9925, 1.433]},
            ],
        },
        "output": {"dir": "out/ternary_c1c5c10_323K", "snapshot_every": 100, "energy_every": 1},
    },
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_document(name: str) -> dict:
    """A deep copy of the raw preset document (editable before building)."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {preset_names()}")
    return copy.deepcopy(_PRESETS[name])


def load_preset(name: str) -> RunConfig:
    return build_config(preset_document(name))
