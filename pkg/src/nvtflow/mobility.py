"""Mobility tensors and diffusion fluxes J_i = -sum_j M_ij grad mu_j."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mesh import FaceField, StaggeredGrid
from .thermo import R_GAS, MixtureSpec


class MobilityKind(str, enum.Enum):
    DIAGONAL = "diagonal"  # (A1)
    MOLAR_AVERAGE = "molar_average"  # (A2)
    MASS_AVERAGE = "mass_average"  # (A3)


class MobilityConfigError(ValueError):
    pass


@dataclass
class MobilitySpec:
    kind: MobilityKind
    d_i: np.ndarray | None = None  # (A1) per-component coefficients [m^2/s]
    d_ij: np.ndarray | None = None  # (A2)/(A3) pairwise coefficients [m^2/s]

    def __post_init__(self):
        self.kind = MobilityKind(self.kind)
        if self.kind is MobilityKind.DIAGONAL:
            if self.d_i is None:
                raise MobilityConfigError("diagonal mobility needs d_i")
            self.d_i = np.atleast_1d(np.asarray(self.d_i, dtype=float))
            if np.any(self.d_i <= 0):
                raise MobilityConfigError("d_i must be positive")
        else:
            if self.d_ij is None:
                raise MobilityConfigError(f"{self.kind.value} mobility needs d_ij")
            d = np.asarray(self.d_ij, dtype=float)
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise MobilityConfigError("d_ij must be square")
            if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0):
                raise MobilityConfigError("d_ij must be symmetric with zero diagonal")
            off = d[~np.eye(d.shape[0], dtype=bool)]
            if np.any(off <= 0):
                raise MobilityConfigError("off-diagonal d_ij must be positive")
            self.d_ij = d

    @property
    def n_components(self) -> int:
        return len(self.d_i) if self.kind is MobilityKind.DIAGONAL else self.d_ij.shape[0]

    @classmethod
    def diagonal(cls, d_i) -> "MobilitySpec":
        return cls(MobilityKind.DIAGONAL, d_i=d_i)

    @classmethod
    def molar_average(cls, d_ij) -> "MobilitySpec":
        return cls(MobilityKind.MOLAR_AVERAGE, d_ij=d_ij)

    @classmethod
    def mass_average(cls, d_ij) -> "MobilitySpec":
        return cls(MobilityKind.MASS_AVERAGE, d_ij=d_ij)


def mobility_matrix(spec: MobilitySpec, mix: MixtureSpec, n) -> np.ndarray:
    """Mobility tensor at one point (``n`` shape ``(M,)``) or pointwise over
    fields (``n`` shape ``(M, ...)``; result ``(M, M, ...)``).

    Entries that involve an absent species are zero.
    """
    n = np.asarray(n, dtype=float)
    m = mix.n_components
    if n.shape[0] != m or spec.n_components != m:
        raise ValueError("component count mismatch between mobility, mixture and n")
    rt = R_GAS * mix.temperature
    extra = n.shape[1:]
    if spec.kind is MobilityKind.DIAGONAL:
        out = np.zeros((m, m) + extra)
        for i in range(m):
            out[i, i] = spec.d_i[i] * n[i] / rt
        return out

    nn = n[:, None] * n[None, :]  # n_i n_j
    d = spec.d_ij.reshape((m, m) + (1,) * len(extra))
    idx = np.arange(m)
    if spec.kind is MobilityKind.MOLAR_AVERAGE:
        total = n.sum(axis=0)
        denom = np.where(total > 0, total, 1.0) * rt
        out = -d * nn / denom
        out[idx, idx] = 0.0
        out[idx, idx] = -out.sum(axis=1)
        return out
    mw = mix.molar_weights.reshape((m,) + (1,) * len(extra))
    rho_i = mw * n
    rho = rho_i.sum(axis=0)
    denom = np.where(rho > 0, rho, 1.0) * rt
    out = -d * nn / denom
    out[idx, idx] = 0.0
    diag = np.einsum("ij...,i...,j...->i...", d, n, rho_i) / (mw * denom)
    out[idx, idx] = diag
    return out


def face_mobility(spec: MobilitySpec, mix: MixtureSpec, n_fields, grid: StaggeredGrid) -> np.ndarray:
    """Mobility averaged onto faces, shape ``(M, M, n_faces)``."""
    cell = mobility_matrix(spec, mix, n_fields)  # (M, M, nx, ny)
    m = mix.n_components
    flat = cell.reshape(m, m, -1)
    interp = grid.interp_matrix
    return np.stack([np.stack([interp @ flat[i, j] for j in range(m)]) for i in range(m)])


def diffusion_flux(spec: MobilitySpec, mix: MixtureSpec, n_fields, mu_fields,
                   grid: StaggeredGrid) -> list[FaceField]:
    """J_i = -sum_j M_ij|_face grad mu_j; zero normal flux on walls."""
    mob = face_mobility(spec, mix, n_fields, grid)
    mu_fields = np.asarray(mu_fields, dtype=float)
    gmu = np.stack([grid.grad_matrix @ f.ravel() for f in mu_fields])
    flux = -np.einsum("ijf,jf->if", mob, gmu)
    return [FaceField.from_flat(grid, f) for f in flux]
