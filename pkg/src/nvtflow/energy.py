"""Discrete energy bookkeeping for the SAV schemes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .interface import InfluenceMatrix, gradient_energy
from .mesh import StaggeredGrid
from .state import FieldState, bulk_energy, face_density, total_moles
from .thermo import MixtureSpec


@dataclass(frozen=True)
class EnergyRecord:
    step: int
    time_s: float
    E_kin_J: float
    F_grad_J: float
    H_sq_J: float
    F_modified_J: float
    F_original_J: float
    total_modified_J: float
    total_original_J: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return list(asdict(self).values())


def kinetic_energy(state: FieldState, mix: MixtureSpec, grid: StaggeredGrid) -> float:
    """1/2 sum over faces of rho_face u^2 times the face control volume."""
    rho_f = face_density(state.n, mix, grid)
    u = state.u.flat()
    return 0.5 * float(np.sum(grid.face_weights * rho_f * u * u))


def modified_helmholtz(state: FieldState, c: InfluenceMatrix, c_t, grid: StaggeredGrid) -> float:
    shift = float(np.dot(c_t, total_moles(state.n, grid)))
    return state.H ** 2 + gradient_energy(c, state.n, grid) - shift


def original_helmholtz(state: FieldState, mix: MixtureSpec, c: InfluenceMatrix, grid: StaggeredGrid) -> float:
    return bulk_energy(state.n, mix, grid) + gradient_energy(c, state.n, grid)


def energy_record(state: FieldState, mix: MixtureSpec, c: InfluenceMatrix, c_t,
                  grid: StaggeredGrid) -> EnergyRecord:
    e_kin = kinetic_energy(state, mix, grid)
    f_grad = gradient_energy(c, state.n, grid)
    h_sq = state.H ** 2
    shift = float(np.dot(c_t, total_moles(state.n, grid)))
    f_mod = h_sq + f_grad - shift
    f_orig = bulk_energy(state.n, mix, grid) + f_grad
    return EnergyRecord(step=state.step, time_s=state.t, E_kin_J=e_kin, F_grad_J=f_grad,
                        H_sq_J=h_sq, F_modified_J=f_mod, F_original_J=f_orig,
                        total_modified_J=e_kin + f_mod, total_original_J=e_kin + f_orig)


@dataclass(frozen=True)
class DissipationVerdict:
    passed: bool
    first_violation: int | None = None  # step of the record that increased
    worst_relative_increase: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


def assert_dissipation(records, tol_rel: float = 1e-10, attr: str = "total_modified_J") -> DissipationVerdict:
    """Check that ``attr`` never grows by more than ``tol_rel`` relative per step."""
    records = list(records)
    if len(records) < 2:
        raise ValueError("need at least two energy records")
    worst = -np.inf
    first = None
    for prev, cur in zip(records, records[1:]):
        a, b = getattr(prev, attr), getattr(cur, attr)
        rel = (b - a) / abs(a) if a != 0 else b - a
        worst = max(worst, rel)
        if rel > tol_rel and first is None:
            first = cur.step
    return DissipationVerdict(first is None, first, float(worst))
