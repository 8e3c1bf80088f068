"""Simulation state and scheme settings shared by both time steppers."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import DEFAULT_TOL
from .mesh import FaceField, StaggeredGrid, face_interp
from .mobility import MobilitySpec
from .thermo import MixtureSpec, helmholtz_bulk


class SchemeConfigError(ValueError):
    pass


@dataclass
class SchemeConfig:
    """Time-step size, SAV energy shift, mobility, viscosities and solver settings."""

    dt: float
    mobility: MobilitySpec
    xi: float = 1e-4  # volumetric viscosity [Pa s]
    eta: float = 1e-4  # shear viscosity [Pa s]
    c_t: np.ndarray | None = None  # energy shift per component [J/mol]
    tol: float = DEFAULT_TOL
    max_iter: int | None = None
    solver: str = "direct"

    def __post_init__(self):
        if not self.dt > 0:
            raise SchemeConfigError("dt must be positive")
        if not self.eta > 0:
            raise SchemeConfigError("eta must be positive")
        if not self.xi > 2.0 / 3.0 * self.eta:
            raise SchemeConfigError("xi must exceed 2/3 eta so that lambda > 0")
        m = self.mobility.n_components
        self.c_t = np.zeros(m) if self.c_t is None else np.asarray(self.c_t, dtype=float)
        if self.c_t.shape != (m,):
            raise SchemeConfigError(f"C_T must have {m} entries")
        if np.any(self.c_t < 0):
            raise SchemeConfigError("C_T entries must be non-negative")

    @property
    def lam(self) -> float:
        return self.xi - 2.0 / 3.0 * self.eta


@dataclass
class FieldState:
    """Molar densities (M, nx, ny), face velocity, SAV scalar and clock."""

    n: np.ndarray
    u: FaceField
    H: float
    t: float = 0.0
    step: int = 0

    def copy(self) -> "FieldState":
        return replace(self, n=self.n.copy(), u=self.u.copy())


def mass_density(n, mix: MixtureSpec) -> np.ndarray:
    return np.tensordot(mix.molar_weights, np.asarray(n), axes=1)


def face_density(n, mix: MixtureSpec, grid: StaggeredGrid) -> np.ndarray:
    """rho on faces (flat), arithmetic mean of adjacent cells."""
    return face_interp(mass_density(n, mix), grid).flat()


def total_moles(n, grid: StaggeredGrid) -> np.ndarray:
    return np.asarray(n).reshape(len(n), -1).sum(axis=1) * grid.cell_volume


def bulk_energy(n, mix: MixtureSpec, grid: StaggeredGrid) -> float:
    return float(np.sum(helmholtz_bulk(mix, n)) * grid.cell_volume)


def sav_radicand(n, mix: MixtureSpec, grid: StaggeredGrid, c_t) -> float:
    return bulk_energy(n, mix, grid) + float(np.dot(c_t, total_moles(n, grid)))


def initial_state(n, mix: MixtureSpec, grid: StaggeredGrid, c_t=None, u: FaceField | None = None) -> FieldState:
    """State with H initialised from the bulk energy of ``n``."""
    n = np.array(n, dtype=float)
    c_t = np.zeros(mix.n_components) if c_t is None else np.asarray(c_t, dtype=float)
    rad = sav_radicand(n, mix, grid, c_t)
    if rad < 0:
        raise SchemeConfigError(
            f"F_b + sum C_T N = {rad:.4e} < 0; increase the energy shift C_T")
    return FieldState(n=n, u=FaceField.zeros(grid) if u is None else u.copy(), H=float(np.sqrt(rad)))
