"""Energy-stable simulation of multi-component two-phase compressible flow
with the Peng-Robinson equation of state on a 2D staggered grid."""
from .config import ConfigError, RunConfig, load_config, parse_config
from .energy import EnergyRecord, assert_dissipation, energy_record
from .mesh import BC, FaceField, StaggeredGrid
from .mobility import MobilityKind, MobilitySpec
from .presets import load_preset
from .runner import build_initial_state, simulate
from .state import FieldState, SchemeConfig
from .thermo import ComponentSpec, MixtureSpec, make_mixture

__version__ = "0.1.0"

__all__ = [
    "BC", "ComponentSpec", "ConfigError", "EnergyRecord", "FaceField", "FieldState", "MixtureSpec",
    "MobilityKind", "MobilitySpec", "RunConfig", "SchemeConfig", "StaggeredGrid", "assert_dissipation",
    "build_initial_state", "energy_record", "load_config", "load_preset", "make_mixture",
    "parse_config", "simulate",
]
