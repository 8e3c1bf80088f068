"""Influence parameters and the gradient part of the free energy."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .mesh import StaggeredGrid
from .thermo import MixtureSpec, ThermoDomainError, pure_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfluenceMatrix:
    c: np.ndarray  # J m^5 / mol^2
    beta: np.ndarray

    @property
    def n_components(self) -> int:
        return self.c.shape[0]

    def min_eigenvalue_ratio(self) -> float:
        ev = np.linalg.eigvalsh(self.c)
        return float(ev.min() / ev.max())

    def is_psd(self, rtol: float = 1e-12) -> bool:
        return self.min_eigenvalue_ratio() >= -rtol


def pure_influence(comp, temperature: float) -> float:
    a, b, _ = pure_params(comp, temperature)
    w = comp.acentric
    gamma = -1e-16 / (1.2326 + 1.3757 * w)
    phi = 1e-16 / (0.9051 + 1.5410 * w)
    tr = temperature / comp.t_crit
    return a * b ** (2.0 / 3.0) * (gamma * (1.0 - tr) + phi)


def influence_matrix(spec: MixtureSpec, beta=None) -> InfluenceMatrix:
    """Influence parameters c_ij = (1 - beta_ij) sqrt(c_i c_j).

    ``beta`` defaults to ``spec.beta``.
    """
    beta = spec.beta if beta is None else np.asarray(beta, dtype=float)
    m = spec.n_components
    if beta.shape != (m, m) or not np.array_equal(beta, beta.T) or np.any(np.diag(beta) != 0):
        raise ValueError("beta must be symmetric with zero diagonal")
    if np.any(beta < 0) or np.any(beta >= 1):
        raise ValueError("beta entries must lie in [0, 1)")
    ci = np.array([pure_influence(c, spec.temperature) for c in spec.components])
    for comp, val in zip(spec.components, ci):
        if not val > 0:
            raise ThermoDomainError(
                f"influence parameter of {comp.name} is {val:.3e} <= 0 at T = {spec.temperature} K")
    c = (1.0 - beta) * np.sqrt(np.outer(ci, ci))
    out = InfluenceMatrix(c=c, beta=beta)
    if not out.is_psd():
        logger.warning("influence matrix is not positive semi-definite (min/max eig %.3e)",
                       out.min_eigenvalue_ratio())
    return out


def _face_gradients(n_fields, grid: StaggeredGrid) -> np.ndarray:
    n_fields = np.asarray(n_fields, dtype=float)
    if n_fields.shape[1:] != grid.shape:
        raise ValueError(f"fields of shape {n_fields.shape[1:]} do not match grid {grid.shape}")
    return np.stack([grid.grad_matrix @ f.ravel() for f in n_fields])


def gradient_energy(c: InfluenceMatrix, n_fields, grid: StaggeredGrid) -> float:
    """Discrete 1/2 sum_ij c_ij grad n_i . grad n_j over the domain [J per unit depth]."""
    gn = _face_gradients(n_fields, grid)
    dens = np.einsum("if,ij,jf->f", gn, c.c, gn)
    return 0.5 * float(np.sum(grid.face_weights * dens))


def gradient_chem_potential(c: InfluenceMatrix, n_fields, grid: StaggeredGrid) -> np.ndarray:
    """-sum_j c_ij Lap n_j for every component, shape ``(M, nx, ny)``."""
    n_fields = np.asarray(n_fields, dtype=float)
    if n_fields.shape[1:] != grid.shape:
        raise ValueError(f"fields of shape {n_fields.shape[1:]} do not match grid {grid.shape}")
    lap = np.stack([grid.laplacian_matrix @ f.ravel() for f in n_fields])
    return (-(c.c @ lap)).reshape(n_fields.shape)
