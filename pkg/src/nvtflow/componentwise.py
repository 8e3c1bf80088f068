"""Component-wise decoupled SAV scheme.

Components are advanced one at a time in mixture order.  Sweep ``i``
solves a scalar bordered system for ``n_i`` and the fractional SAV value,
with chemical potential

    mu_i = (H^(i) + H^(i-1)) w_i - c_ii Lap n_i^{k+1} - sum_{j != i} c_ij Lap n_j^mixed

where ``w_i`` uses the bulk potential at the mixed state and the SAV
denominator frozen at level ``k``.  Each sweep then pushes the intermediate
velocity by ``-dt / rho n_i grad mu_i``.  Requires a diagonal mobility.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import coupled
from .interface import InfluenceMatrix, gradient_energy, influence_matrix
from .linalg import solve_bordered
from .mesh import FaceField, StaggeredGrid
from .mobility import MobilityKind, face_mobility
from .state import FieldState, SchemeConfig, SchemeConfigError, face_density, sav_radicand
from .thermo import MixtureSpec, chemical_potential_bulk

logger = logging.getLogger(__name__)


@dataclass
class SweepAudit:
    """Energy balance of one component sweep.

    ``lhs`` is the change of H^2 + F_grad (mixed levels); ``rhs`` is
    dt (grad mu_i, n_i u_star) - dt (M_i grad mu_i, grad mu_i).
    """

    component: int
    lhs: float
    rhs: float
    scale: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol_rel: float = 1e-9) -> bool:
        return self.lhs <= self.rhs + tol_rel * self.scale


@dataclass
class FractionalState:
    """Mixed-level densities, fractional SAV value and intermediate velocity
    after ``done`` components have been swept."""

    n_mixed: np.ndarray
    H_frac: float
    u_star_frac: FaceField
    done: int = 0
    velocities: list[FaceField] = field(default_factory=list)
    mu: list[np.ndarray] = field(default_factory=list)
    J: list[FaceField] = field(default_factory=list)
    audits: list[SweepAudit] = field(default_factory=list)

    @classmethod
    def start(cls, state: FieldState) -> "FractionalState":
        return cls(state.n.copy(), state.H, state.u.copy())


@dataclass
class _Frozen:
    """Level-k quantities shared by every sweep of one step."""

    denom: float
    n_face: np.ndarray
    rho_face: np.ndarray
    mobility: np.ndarray
    c: InfluenceMatrix


def require_diagonal(config: SchemeConfig):
    if config.mobility.kind is not MobilityKind.DIAGONAL:
        raise SchemeConfigError(
            f"componentwise scheme needs a diagonal mobility, got {config.mobility.kind.value}")


def _frozen(state: FieldState, mix: MixtureSpec, config: SchemeConfig, grid: StaggeredGrid) -> _Frozen:
    rad = sav_radicand(state.n, mix, grid, config.c_t)
    if rad < 0:
        raise coupled.EnergyShiftError(
            f"energy shift insufficient: F_b + sum C_T N = {rad:.4e} < 0 with C_T = {list(config.c_t)}")
    return _Frozen(float(np.sqrt(rad)), coupled.donor_densities(state.n, state.u, grid),
                   face_density(state.n, mix, grid),
                   face_mobility(config.mobility, mix, state.n, grid), influence_matrix(mix))


def _face_inner(a, b, grid: StaggeredGrid) -> float:
    return float(np.sum(grid.face_weights * a * b))


def component_solve(i: int, frac: FractionalState, state_k: FieldState, mix: MixtureSpec,
                    config: SchemeConfig, grid: StaggeredGrid, frozen: _Frozen | None = None) -> FractionalState:
    """Advance component ``i`` (0-based); ``frac`` must have swept 0..i-1."""
    require_diagonal(config)
    if frac.done != i:
        raise ValueError(f"expected sweep {frac.done}, got component {i}")
    fz = frozen if frozen is not None else _frozen(state_k, mix, config, grid)
    dt, vol = config.dt, grid.cell_volume
    G, D, L = grid.grad_matrix, grid.div_matrix, grid.laplacian_matrix
    c = fz.c.c
    n_mix = frac.n_mixed
    m = len(n_mix)

    w = (chemical_potential_bulk(mix, n_mix)[i] / (2.0 * fz.denom)).ravel()
    others = [j for j in range(m) if j != i]
    r = np.zeros(grid.n_cells)
    for j in others:
        r -= c[i, j] * (L @ n_mix[j].ravel())
    nf = fz.n_face[i]
    K = fz.mobility[i, i] + dt * nf * nf / fz.rho_face
    coupled._check_finite(w, K)

    DKG = (D @ sp.diags(K) @ G).tocsr()
    A = (sp.identity(grid.n_cells, format="csr") + dt * c[i, i] * (DKG @ L)).tocsr()
    g = -dt * (DKG @ w)
    us_prev = frac.u_star_frac.flat()
    n_old = state_k.n[i].ravel()
    rhs = n_old - dt * (D @ (nf * us_prev)) + dt * (DKG @ (frac.H_frac * w + r))
    rhs_h = frac.H_frac - vol * float(w @ n_old)
    x, h, _ = solve_bordered(A, g, -vol * w, 1.0, rhs, rhs_h, tol=config.tol,
                             max_iter=config.max_iter, method=config.solver)

    mu = (h + frac.H_frac) * w - c[i, i] * (L @ x) + r
    gmu = G @ mu
    us_new = us_prev - dt * nf * gmu / fz.rho_face
    J = -fz.mobility[i, i] * gmu

    n_next = n_mix.copy()
    n_next[i] = x.reshape(grid.shape)
    f_prev = gradient_energy(fz.c, n_mix, grid)
    f_next = gradient_energy(fz.c, n_next, grid)
    lhs = h * h - frac.H_frac ** 2 + f_next - f_prev
    work = dt * _face_inner(gmu, nf * us_new, grid)
    diss = dt * _face_inner(fz.mobility[i, i] * gmu, gmu, grid)
    audit = SweepAudit(i, lhs, work - diss, scale=abs(frac.H_frac) ** 2 + f_prev)
    if not audit.holds():
        logger.warning("sweep %d energy audit slack %.3e", i, audit.slack)

    us_field = coupled._flux_field(frac.u_star_frac, us_new)
    return FractionalState(
        n_mixed=n_next, H_frac=h, u_star_frac=us_field, done=i + 1,
        velocities=frac.velocities + [us_field],
        mu=frac.mu + [mu.reshape(grid.shape)],
        J=frac.J + [coupled._flux_field(frac.u_star_frac, J)],
        audits=frac.audits + [audit])


def mean_intermediate_velocity(velocities, state_k: FieldState, mix: MixtureSpec,
                               grid: StaggeredGrid, n_face=None) -> FaceField:
    """Partial-density weighted average sum_i rho_i u_i / sum_i rho_i on faces.

    ``n_face`` defaults to donor values selected by the level-k velocity.
    """
    if len(velocities) != mix.n_components:
        raise ValueError("need one intermediate velocity per component")
    nf = coupled.donor_densities(state_k.n, state_k.u, grid) if n_face is None else n_face
    rho_i = mix.molar_weights[:, None] * nf
    rho = rho_i.sum(axis=0)
    if np.any(rho <= 0):
        raise ValueError("mass density vanishes on a face")
    avg = sum(rho_i[k] * velocities[k].flat() for k in range(len(velocities))) / rho
    return coupled._flux_field(velocities[0], avg)


def sweep(state: FieldState, mix: MixtureSpec, config: SchemeConfig, grid: StaggeredGrid) -> tuple[FractionalState, _Frozen]:
    require_diagonal(config)
    fz = _frozen(state, mix, config, grid)
    frac = FractionalState.start(state)
    for i in range(mix.n_components):
        frac = component_solve(i, frac, state, mix, config, grid, frozen=fz)
    return frac, fz


def mass_flux(frac: FractionalState, fz: _Frozen, mix: MixtureSpec, grid: StaggeredGrid) -> FaceField:
    """sum_i M_w,i (n_i u_star^(i) + J_i), the flux that moved the mass."""
    mw = mix.molar_weights
    flux = sum(mw[i] * (fz.n_face[i] * frac.velocities[i].flat() + frac.J[i].flat())
               for i in range(len(mw)))
    return coupled._flux_field(frac.u_star_frac, flux)


def step(state: FieldState, mix: MixtureSpec, config: SchemeConfig, grid: StaggeredGrid) -> FieldState:
    frac, fz = sweep(state, mix, config, grid)
    u_new = coupled.solve_momentum(fz.rho_face, frac.u_star_frac, mass_flux(frac, fz, mix, grid), config, grid)
    return FieldState(n=frac.n_mixed, u=u_new, H=frac.H_frac, t=state.t + config.dt, step=state.step + 1)
