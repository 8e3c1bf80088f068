"""Peng-Robinson bulk thermodynamics in the NVT (moles, volume, temperature) setting.

All quantities are SI: molar densities in mol/m^3, energies in J/m^3,
chemical potentials in J/mol and pressures in Pa.  Functions accept a
density array whose first axis runs over components, so the same call
evaluates a single point (shape ``(M,)``) or whole fields (shape
``(M, nx, ny)``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

R_GAS = 8.3144598  # J/(mol K)
BAR = 1.0e5  # Pa

SQRT2 = np.sqrt(2.0)
_B_SERIES = 1.0e-7
_COVOLUME_MARGIN = 1.0e-12


class ThermoDomainError(ValueError):
    """Raised when a state lies outside the domain of the free energy."""


class CovolumeError(ThermoDomainError):
    """Raised when b*n reaches 1 and the repulsion logarithm is undefined."""


@dataclass(frozen=True)
class ComponentSpec:
    """Critical constants and molar weight of one species (SI units)."""

    name: str
    p_crit: float  # Pa
    t_crit: float  # K
    acentric: float
    molar_weight: float  # kg/mol

    def __post_init__(self):
        for attr in ("p_crit", "t_crit", "molar_weight"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{self.name}: {attr} must be positive")


_TABLE = {
    # name: (P_c [bar], T_c [K], omega, M_w [g/mol])
    "methane": (45.99, 190.56, 0.011, 16.04),
    "pentane": (33.70, 469.7, 0.251, 72.15),
    "decane": (21.1, 617.7, 0.489, 142.28),
}


def component_from_table(name: str, p_crit_bar: float, t_crit: float,
                         acentric: float, molar_weight_g_mol: float) -> ComponentSpec:
    """Build a component from tabulated units (bar, K, -, g/mol)."""
    return ComponentSpec(name=name, p_crit=p_crit_bar * BAR, t_crit=t_crit,
                         acentric=acentric, molar_weight=molar_weight_g_mol * 1e-3)


def builtin_components() -> list[ComponentSpec]:
    """Methane, pentane and decane."""
    return [component_from_table(name, *row) for name, row in _TABLE.items()]


def lookup_component(name: str) -> ComponentSpec:
    for comp in builtin_components():
        if comp.name == name.lower():
            return comp
    raise KeyError(f"unknown component {name!r}; known: {sorted(_TABLE)}")


@dataclass
class MixtureSpec:
    """Components at a fixed temperature, with EOS and gradient-energy
    binary coefficients.

    ``k_ij`` defaults to zero; ``beta`` (cross influence reduction)
    defaults to 0.5 off the diagonal.
    """

    components: list[ComponentSpec]
    temperature: float
    k_ij: np.ndarray | None = None
    beta: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.components)
        if m < 1:
            raise ValueError("mixture needs at least one component")
        if not self.temperature > 0:
            raise ThermoDomainError("temperature must be positive")
        self.k_ij = _check_binary(self.k_ij, m, "k_ij", default=0.0)
        self.beta = _check_binary(self.beta, m, "beta", default=0.5)
        if np.any(self.beta < 0) or np.any(self.beta >= 1):
            raise ValueError("beta entries must satisfy 0 <= beta_ij < 1")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def molar_weights(self) -> np.ndarray:
        return np.array([c.molar_weight for c in self.components])

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.components]


def _check_binary(mat, m: int, label: str, default: float) -> np.ndarray:
    if mat is None:
        mat = np.full((m, m), default)
        np.fill_diagonal(mat, 0.0)
        return mat
    mat = np.asarray(mat, dtype=float)
    if np.ndim(mat) == 0:
        mat = np.full((m, m), float(mat))
        np.fill_diagonal(mat, 0.0)
    if mat.shape != (m, m):
        raise ValueError(f"{label} must be {m}x{m}, got {mat.shape}")
    if not np.array_equal(mat, mat.T):
        raise ValueError(f"{label} must be symmetric")
    if np.any(np.diag(mat) != 0):
        raise ValueError(f"{label} must have a zero diagonal")
    return mat


def m_coefficient(acentric: float) -> float:
    w = acentric
    if w <= 0.49:
        return 0.37464 + 1.54226 * w - 0.26992 * w ** 2
    return 0.379642 + 1.485030 * w - 0.164423 * w ** 2 + 0.016666 * w ** 3


def pure_params(comp: ComponentSpec, temperature: float) -> tuple[float, float, float]:
    """Return ``(a_i, b_i, m_i)`` for one component at ``temperature``."""
    if not temperature > 0:
        raise ThermoDomainError("temperature must be positive")
    m = m_coefficient(comp.acentric)
    tr = temperature / comp.t_crit
    alpha = (1.0 + m * (1.0 - np.sqrt(tr))) ** 2
    a = 0.45724 * R_GAS ** 2 * comp.t_crit ** 2 / comp.p_crit * alpha
    b = 0.07780 * R_GAS * comp.t_crit / comp.p_crit
    return a, b, m


@dataclass(frozen=True)
class _EosCoefficients:
    a_pure: np.ndarray
    b_pure: np.ndarray
    a_cross: np.ndarray  # sqrt(a_i a_j)(1 - k_ij)


def eos_coefficients(spec: MixtureSpec) -> _EosCoefficients:
    params = [pure_params(c, spec.temperature) for c in spec.components]
    a = np.array([p[0] for p in params])
    b = np.array([p[1] for p in params])
    cross = np.sqrt(np.outer(a, a)) * (1.0 - spec.k_ij)
    return _EosCoefficients(a, b, cross)


def mixture_params(spec: MixtureSpec, n) -> tuple[np.ndarray, np.ndarray]:
    """Mixing-rule parameters ``(a, b)`` from mole fractions of ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ThermoDomainError("molar densities must be non-negative")
    total = n.sum(axis=0)
    if np.any(total <= 0):
        raise ThermoDomainError("mole fractions undefined for zero total density")
    y = n / total
    coef = eos_coefficients(spec)
    a = np.einsum("i...,ij,j...->...", y, coef.a_cross, y)
    b = np.tensordot(coef.b_pure, y, axes=1)
    return a, b


@dataclass
class BulkEosEval:
    f_b: np.ndarray
    mu_b: np.ndarray
    p_b: np.ndarray


def _attraction_kernel(bn):
    """g(B) = ln[(1+(1-sqrt2)B)/(1+(1+sqrt2)B)] / (2 sqrt2 B) and dg/dB."""
    bn = np.asarray(bn, dtype=float)
    small = bn < _B_SERIES
    safe = np.where(small, 1.0, bn)
    log_ratio = np.log1p((1.0 - SQRT2) * safe) - np.log1p((1.0 + SQRT2) * safe)
    g = log_ratio / (2.0 * SQRT2 * safe)
    dg = -1.0 / (safe * (1.0 + 2.0 * safe - safe ** 2)) - g / safe
    g = np.where(small, -1.0 + bn - (5.0 / 3.0) * bn ** 2, g)
    dg = np.where(small, 1.0 - (10.0 / 3.0) * bn, dg)
    return g, dg


def _prepare(spec: MixtureSpec, n):
    n = np.asarray(n, dtype=float)
    if n.shape[0] != spec.n_components:
        raise ValueError(f"expected {spec.n_components} components, got {n.shape[0]}")
    if not np.all(np.isfinite(n)):
        raise ThermoDomainError("molar densities must be finite")
    if np.any(n <= 0):
        raise ThermoDomainError("molar densities must be strictly positive")
    coef = eos_coefficients(spec)
    bn = np.tensordot(coef.b_pure, n, axes=1)
    if np.any(bn > 1.0 - _COVOLUME_MARGIN):
        raise CovolumeError(f"covolume violated: max b*n = {np.max(bn):.6g}")
    qn = np.tensordot(coef.a_cross, n, axes=1)  # (Q n)_i
    an2 = np.einsum("i...,i...->...", n, qn)  # a n^2
    return n, coef, bn, qn, an2


def helmholtz_bulk(spec: MixtureSpec, n) -> np.ndarray:
    """Bulk Helmholtz free-energy density f_b(n) [J/m^3]."""
    n, coef, bn, qn, an2 = _prepare(spec, n)
    rt = R_GAS * spec.temperature
    ntot = n.sum(axis=0)
    ideal = rt * np.sum(n * (np.log(n) - 1.0), axis=0)
    repulsion = -ntot * rt * np.log1p(-bn)
    g, _ = _attraction_kernel(bn)
    return ideal + repulsion + an2 * g


def chemical_potential_bulk(spec: MixtureSpec, n) -> np.ndarray:
    """Bulk chemical potentials mu_i = d f_b / d n_i [J/mol], shape like ``n``.

    Uses b n = sum_i b_i n_i and a n^2 = n^T Q n, so the composition
    dependence of the mixing rules is carried exactly.
    """
    n, coef, bn, qn, an2 = _prepare(spec, n)
    rt = R_GAS * spec.temperature
    ntot = n.sum(axis=0)
    g, dg = _attraction_kernel(bn)
    b = coef.b_pure.reshape((-1,) + (1,) * (n.ndim - 1))
    mu = rt * np.log(n)
    mu = mu - rt * np.log1p(-bn) + ntot * rt * b / (1.0 - bn)
    mu = mu + 2.0 * qn * g + an2 * dg * b
    return mu


def pressure_bulk(spec: MixtureSpec, n) -> np.ndarray:
    """Bulk pressure sum_i n_i mu_i - f_b [Pa]."""
    n = np.asarray(n, dtype=float)
    mu = chemical_potential_bulk(spec, n)
    return np.sum(n * mu, axis=0) - helmholtz_bulk(spec, n)


def pressure_closed_form(spec: MixtureSpec, n) -> np.ndarray:
    """Textbook PR pressure nRT/(1-bn) - a n^2/(1+2bn-b^2n^2)."""
    n, coef, bn, qn, an2 = _prepare(spec, n)
    rt = R_GAS * spec.temperature
    ntot = n.sum(axis=0)
    return ntot * rt / (1.0 - bn) - an2 / (1.0 + 2.0 * bn - bn ** 2)


def bulk_eval(spec: MixtureSpec, n) -> BulkEosEval:
    n = np.asarray(n, dtype=float)
    f = helmholtz_bulk(spec, n)
    mu = chemical_potential_bulk(spec, n)
    return BulkEosEval(f_b=f, mu_b=mu, p_b=np.sum(n * mu, axis=0) - f)


def make_mixture(names: Sequence[str], temperature: float, k_ij=None, beta=None) -> MixtureSpec:
    return MixtureSpec([lookup_component(nm) for nm in names], temperature, k_ij=k_ij, beta=beta)
