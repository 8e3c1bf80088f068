"""Velocity-density decoupled SAV scheme.

One step solves a single linear bordered system for all new molar
densities and the SAV scalar, reconstructs the chemical potentials, the
diffusion fluxes and the intermediate velocity ``u_star``, then solves a
linear momentum system for the new face velocities.

Discrete compatibility used throughout:

* gradient energy, the Laplacian in the chemical potential, diffusion
  fluxes and ``u_star`` all use the same face gradient, so summation by
  parts holds exactly;
* the face densities ``n_i`` multiplying ``u_star`` in the mass flux are
  the same ones used to build ``u_star`` (donor cell, chosen by the sign
  of the old velocity), which makes the pressure-work terms cancel;
* momentum convection is driven by the discrete mass flux of the mass
  balance, averaged onto face control volumes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .interface import InfluenceMatrix, influence_matrix
from .linalg import SolverError, solve, solve_bordered
from .mesh import FaceField, StaggeredGrid, momentum_operators, upwind_face_values
from .mobility import face_mobility
from .state import FieldState, SchemeConfig, face_density, sav_radicand
from .thermo import MixtureSpec, chemical_potential_bulk

logger = logging.getLogger(__name__)


class EnergyShiftError(ValueError):
    """F_b + sum C_T N went negative, so the SAV square root is undefined."""


def sav_weights(state: FieldState, mix: MixtureSpec, grid: StaggeredGrid, c_t):
    """Return ``(denom, w)`` with denom = sqrt(F_b + sum C_T N) and
    w_i = mu_i^b(n) / (2 denom) as ``(M, nx, ny)`` fields."""
    rad = sav_radicand(state.n, mix, grid, c_t)
    if rad < 0:
        raise EnergyShiftError(
            f"energy shift insufficient: F_b + sum C_T N = {rad:.4e} < 0 with C_T = {list(c_t)}")
    denom = float(np.sqrt(rad))
    mu_b = chemical_potential_bulk(mix, state.n)
    return denom, mu_b / (2.0 * denom)


def donor_densities(n, u: FaceField, grid: StaggeredGrid) -> np.ndarray:
    """Donor-cell face values of every component, ``(M, n_faces)``."""
    return np.stack([upwind_face_values(q, u, grid).flat() for q in n])


@dataclass
class MassSystem:
    A: sp.csr_matrix
    g: np.ndarray
    w: np.ndarray
    sigma: float
    rhs: np.ndarray
    rhs_h: float
    sav_w: np.ndarray  # (M, nx, ny)
    denom: float
    n_face: np.ndarray  # (M, nf) donor values
    rho_face: np.ndarray  # (nf,)
    mobility: np.ndarray  # (M, M, nf)
    c: InfluenceMatrix


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SolverError("non-finite coefficients in assembled system")


def assemble_mass_system(state: FieldState, mix: MixtureSpec, config: SchemeConfig,
                         grid: StaggeredGrid) -> MassSystem:
    """Assemble the bordered system for (n^{k+1}, H^{k+1}).

    Eliminating mu and u_star leaves, per component,
    n_i - dt sum_j D K_ij G mu_j = n_i^k - dt D(n_i,f u^k)
    with the effective face mobility K_ij = M_ij + dt n_i,f n_j,f / rho_f.
    """
    m = mix.n_components
    dt = config.dt
    G, D, L = grid.grad_matrix, grid.div_matrix, grid.laplacian_matrix
    c = influence_matrix(mix)
    denom, w = sav_weights(state, mix, grid, config.c_t)
    n_face = donor_densities(state.n, state.u, grid)
    rho_f = face_density(state.n, mix, grid)
    mob = face_mobility(config.mobility, mix, state.n, grid)
    K = mob + dt * n_face[:, None, :] * n_face[None, :, :] / rho_f
    _check_finite(w, K)
    KC = np.einsum("ijf,jl->ilf", K, c.c)
    GL = (G @ L).tocsr()
    eye = sp.identity(grid.n_cells, format="csr")
    blocks = [[(eye if i == l else None) for l in range(m)] for i in range(m)]
    for i in range(m):
        for l in range(m):
            blk = dt * (D @ sp.diags(KC[i, l]) @ GL)
            blocks[i][l] = blk + eye if i == l else blk
    A = sp.bmat(blocks, format="csr")

    gw = np.stack([G @ wi.ravel() for wi in w])  # (M, nf)
    g = -dt * np.concatenate([D @ np.einsum("jf,jf->f", K[i], gw) for i in range(m)])
    u_flat = state.u.flat()
    conv = np.concatenate([D @ (n_face[i] * u_flat) for i in range(m)])
    rhs = state.n.ravel() - dt * conv - state.H * g
    vol = grid.cell_volume
    w_border = -vol * w.ravel()
    rhs_h = state.H - vol * float(np.dot(w.ravel(), state.n.ravel()))
    return MassSystem(A, g, w_border, 1.0, rhs, rhs_h, w, denom, n_face, rho_f, mob, c)


@dataclass
class MassStepResult:
    n: np.ndarray
    H: float
    mu: np.ndarray  # (M, nx, ny)
    u_star: FaceField
    J: list[FaceField]
    n_face: np.ndarray
    rho_face: np.ndarray
    sav_w: np.ndarray
    residual: float

    def mass_flux(self, mix: MixtureSpec) -> FaceField:
        """Total mass flux sum_i M_w,i (n_i,f u_star + J_i) on faces."""
        mw = mix.molar_weights
        us = self.u_star.flat()
        flux = sum(mw[i] * (self.n_face[i] * us + self.J[i].flat()) for i in range(len(mw)))
        return _flux_field(self.u_star, flux)


def _flux_field(template: FaceField, flat) -> FaceField:
    nfx = template.x.size
    return FaceField(flat[:nfx].reshape(template.x.shape), flat[nfx:].reshape(template.y.shape))


def chemical_potentials(n_new, H_new: float, H_old: float, sav_w, c: InfluenceMatrix,
                        grid: StaggeredGrid) -> np.ndarray:
    """mu_i = (H^{k+1} + H^k) w_i - sum_j c_ij Lap n_j^{k+1}."""
    m = len(n_new)
    lap = np.stack([grid.laplacian_matrix @ q.ravel() for q in n_new])
    mu = (H_new + H_old) * sav_w.reshape(m, -1) - c.c @ lap
    return mu.reshape(np.shape(n_new))


def intermediate_velocity(u: FaceField, n_face, rho_face, mu, dt: float, grid: StaggeredGrid) -> FaceField:
    """u_star = u - dt / rho_f sum_i n_i,f grad mu_i."""
    force = sum(n_face[i] * (grid.grad_matrix @ mu[i].ravel()) for i in range(len(mu)))
    return _flux_field(u, u.flat() - dt * force / rho_face)


def step_mass(state: FieldState, mix: MixtureSpec, config: SchemeConfig, grid: StaggeredGrid) -> MassStepResult:
    sys_ = assemble_mass_system(state, mix, config, grid)
    x, h, report = solve_bordered(sys_.A, sys_.g, sys_.w, sys_.sigma, sys_.rhs, sys_.rhs_h,
                                  tol=config.tol, max_iter=config.max_iter, method=config.solver)
    n_new = x.reshape(state.n.shape)
    mu = chemical_potentials(n_new, h, state.H, sys_.sav_w, sys_.c, grid)
    u_star = intermediate_velocity(state.u, sys_.n_face, sys_.rho_face, mu, config.dt, grid)
    gmu = np.stack([grid.grad_matrix @ q.ravel() for q in mu])
    J = [_flux_field(state.u, f) for f in -np.einsum("ijf,jf->if", sys_.mobility, gmu)]
    return MassStepResult(n_new, h, mu, u_star, J, sys_.n_face, sys_.rho_face, sys_.sav_w, report.residual)


def solve_momentum(rho_face, u_star: FaceField, mass_flux: FaceField, config: SchemeConfig,
                   grid: StaggeredGrid) -> FaceField:
    """Solve rho_f (u - u_star)/dt + (m . grad) u = viscous(u) with u = 0 on walls."""
    ops = momentum_operators(grid, rho_face, config.eta, config.lam)
    lhs = sp.diags(rho_face / config.dt) + ops.convection(mass_flux) - ops.viscous
    lhs = ops.pin_rows(lhs)
    rhs = np.where(grid.boundary_faces, 0.0, rho_face * u_star.flat() / config.dt)
    x, report = solve(lhs, rhs, tol=config.tol, max_iter=config.max_iter, method=config.solver)
    if not report.converged:
        raise SolverError(f"momentum solve failed (residual {report.residual:.3e})")
    x = np.where(grid.boundary_faces, x[grid.face_owner], x)
    if not grid.periodic:
        x[grid.boundary_faces] = 0.0
    return _flux_field(u_star, x)


def step_momentum(state: FieldState, mass: MassStepResult, mix: MixtureSpec, config: SchemeConfig,
                  grid: StaggeredGrid) -> FaceField:
    """New face velocity; convection is advected by the intermediate velocity."""
    return solve_momentum(mass.rho_face, mass.u_star, mass.mass_flux(mix), config, grid)


def step(state: FieldState, mix: MixtureSpec, config: SchemeConfig, grid: StaggeredGrid) -> FieldState:
    mass = step_mass(state, mix, config, grid)
    u_new = step_momentum(state, mass, mix, config, grid)
    return FieldState(n=mass.n, u=u_new, H=mass.H, t=state.t + config.dt, step=state.step + 1)


def residual_audit(state: FieldState, mass: MassStepResult, mix: MixtureSpec, config: SchemeConfig,
                   grid: StaggeredGrid) -> dict[str, float]:
    """Relative residuals of the discrete SAV, intermediate-velocity and mass equations."""
    dt, vol = config.dt, grid.cell_volume
    D = grid.div_matrix
    c = influence_matrix(mix)
    m = mix.n_components
    _, w = sav_weights(state, mix, grid, config.c_t)
    mu = chemical_potentials(mass.n, mass.H, state.H, w, c, grid)
    mu_res = np.max(np.abs(mu - mass.mu)) / max(np.max(np.abs(mass.mu)), 1e-300)
    dn = mass.n - state.n
    sav_res = abs(mass.H - state.H - vol * float(np.sum(w * dn))) / max(abs(state.H), 1e-300)
    n_face = donor_densities(state.n, state.u, grid)
    rho_f = face_density(state.n, mix, grid)
    u_star = intermediate_velocity(state.u, n_face, rho_f, mass.mu, dt, grid)
    vel_scale = max(np.max(np.abs(u_star.flat())), 1e-300)
    vel_res = np.max(np.abs(u_star.flat() - mass.u_star.flat())) / vel_scale
    mass_res = 0.0
    us = mass.u_star.flat()
    for i in range(m):
        r = dn[i].ravel() + dt * (D @ (n_face[i] * us + mass.J[i].flat()))
        mass_res = max(mass_res, np.max(np.abs(r)) / np.max(np.abs(state.n[i])))
    return {"chem_potential": float(mu_res), "sav": float(sav_res),
            "velocity": float(vel_res), "mass": float(mass_res)}
