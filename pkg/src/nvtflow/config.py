"""Run configuration: YAML schema, validation and unit conversion.

Document layout (units in the key names are converted to SI on load)::

    mixture:
      temperature: 310.0            # K
      components: [methane, pentane]  # or inline mappings, see below
      k_ij: 0.0                     # scalar or MxM
      beta_ij: 0.5                  # scalar or MxM
    mobility: {kind: molar_average, D: 1.0e-8}   # D scalar or MxM; diagonal takes D_i
    scheme: coupled                 # or componentwise
    grid: {nx: 40, ny: 40, lx_nm: 20, ly_nm: 20, bc: no_flux}
    time: {dt: 1.0e-12, steps: 200}
    C_T: 0.0                        # J/mol, scalar or length M
    viscosity: {xi: 1.0e-4, eta: 1.0e-4}
    initial:
      background_kmol_m3: [7.4302, 0.6736]
      droplets:
        - {center_nm: [10, 10], size_nm: [10, 10], density_kmol_m3: [6.8663, 4.7915]}
    output: {dir: out, snapshot_every: 0, energy_every: 1}
    solver: {tol: 1.0e-10, max_iter: null, method: direct}

An inline component is ``{name, p_crit_bar, t_crit, acentric, molar_weight_g_mol}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .linalg import DEFAULT_TOL
from .mesh import BC, StaggeredGrid
from .mobility import MobilityConfigError, MobilityKind, MobilitySpec
from .state import SchemeConfig, SchemeConfigError
from .thermo import ComponentSpec, MixtureSpec, component_from_table, lookup_component

NM = 1e-9
KMOL = 1e3

SCHEMES = ("coupled", "componentwise")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f"{path}: {msg}" if path else msg)


@dataclass
class Droplet:
    center: tuple[float, float]  # m
    size: tuple[float, float]  # m
    density: np.ndarray  # mol/m^3

    def bounds(self):
        (cx, cy), (sx, sy) = self.center, self.size
        return cx - sx / 2, cx + sx / 2, cy - sy / 2, cy + sy / 2

    def overlaps(self, other: "Droplet") -> bool:
        a, b = self.bounds(), other.bounds()
        return a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]


@dataclass
class OutputConfig:
    dir: Path = Path("out")
    snapshot_every: int = 0
    energy_every: int = 1


@dataclass
class RunConfig:
    mixture: MixtureSpec
    scheme: str
    grid: StaggeredGrid
    steps: int
    scheme_config: SchemeConfig
    background: np.ndarray
    droplets: list[Droplet] = field(default_factory=list)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def mobility(self) -> MobilitySpec:
        return self.scheme_config.mobility

    @property
    def dt(self) -> float:
        return self.scheme_config.dt

    @property
    def c_t(self) -> np.ndarray:
        return self.scheme_config.c_t


_KEYS = {
    "": {"mixture", "mobility", "scheme", "grid", "time", "C_T", "viscosity", "initial", "output", "solver"},
    "mixture": {"temperature", "components", "k_ij", "beta_ij"},
    "mobility": {"kind", "D", "D_i", "D_ij"},
    "grid": {"nx", "ny", "lx_nm", "ly_nm", "bc"},
    "time": {"dt", "steps"},
    "viscosity": {"xi", "eta"},
    "initial": {"background_kmol_m3", "droplets"},
    "output": {"dir", "snapshot_every", "energy_every"},
    "solver": {"tol", "max_iter", "method"},
    "droplet": {"center_nm", "size_nm", "density_kmol_m3"},
    "component": {"name", "p_crit_bar", "t_crit", "acentric", "molar_weight_g_mol"},
}
_REQUIRED = {
    "": {"mixture", "mobility", "grid", "time", "initial"},
    "mixture": {"temperature", "components"},
    "mobility": {"kind"},
    "grid": {"nx", "ny", "lx_nm", "ly_nm"},
    "time": {"dt", "steps"},
    "initial": {"background_kmol_m3"},
    "droplet": {"center_nm", "size_nm", "density_kmol_m3"},
    "component": {"name", "p_crit_bar", "t_crit", "acentric", "molar_weight_g_mol"},
}


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _block(doc, path: str, kind: str) -> dict:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected a mapping")
    unknown = set(doc) - _KEYS[kind]
    if unknown:
        raise ConfigError(_join(path, sorted(unknown)[0]), "unknown key")
    missing = _REQUIRED.get(kind, set()) - set(doc)
    if missing:
        raise ConfigError(_join(path, sorted(missing)[0]), "required key missing")
    return doc


def _number(val, path: str, positive=False, nonneg=False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    val = float(val)
    if not np.isfinite(val):
        raise ConfigError(path, "must be finite")
    if positive and not val > 0:
        raise ConfigError(path, "must be positive")
    if nonneg and val < 0:
        raise ConfigError(path, "must be non-negative")
    return val


def _integer(val, path: str, minimum: int = 0) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(path, f"expected an integer, got {val!r}")
    if val < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return val


def _vector(val, m: int, path: str, **kw) -> np.ndarray:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return np.full(m, _number(val, path, **kw))
    if not isinstance(val, list) or len(val) != m:
        raise ConfigError(path, f"expected a list of {m} numbers")
    return np.array([_number(v, _join(path, k), **kw) for k, v in enumerate(val)])


def _matrix(val, m: int, path: str, default: float | None = None) -> np.ndarray:
    """Scalar (off-diagonal fill) or full symmetric MxM matrix."""
    if val is None:
        val = default
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        mat = np.full((m, m), _number(val, path))
        np.fill_diagonal(mat, 0.0)
        return mat
    if not isinstance(val, list) or len(val) != m:
        raise ConfigError(path, f"expected a scalar or {m}x{m} matrix")
    rows = []
    for i, row in enumerate(val):
        if not isinstance(row, list) or len(row) != m:
            raise ConfigError(_join(path, i), f"expected {m} entries")
        rows.append([_number(v, _join(_join(path, i), j)) for j, v in enumerate(row)])
    mat = np.array(rows)
    if not np.array_equal(mat, mat.T):
        raise ConfigError(path, "must be symmetric")
    if np.any(np.diag(mat) != 0):
        raise ConfigError(path, "diagonal must be zero")
    return mat


def _component(item, path: str) -> ComponentSpec:
    if isinstance(item, str):
        try:
            return lookup_component(item)
        except KeyError as exc:
            raise ConfigError(path, str(exc.args[0])) from None
    doc = _block(item, path, "component")
    try:
        return component_from_table(
            str(doc["name"]), _number(doc["p_crit_bar"], _join(path, "p_crit_bar"), positive=True),
            _number(doc["t_crit"], _join(path, "t_crit"), positive=True),
            _number(doc["acentric"], _join(path, "acentric")),
            _number(doc["molar_weight_g_mol"], _join(path, "molar_weight_g_mol"), positive=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


def _mixture(doc) -> MixtureSpec:
    doc = _block(doc, "mixture", "mixture")
    comps = doc["components"]
    if not isinstance(comps, list) or not comps:
        raise ConfigError("mixture.components", "expected a non-empty list")
    specs = [_component(c, _join("mixture.components", k)) for k, c in enumerate(comps)]
    m = len(specs)
    temp = _number(doc["temperature"], "mixture.temperature", positive=True)
    k_ij = _matrix(doc.get("k_ij"), m, "mixture.k_ij", default=0.0)
    beta = _matrix(doc.get("beta_ij"), m, "mixture.beta_ij", default=0.5)
    if np.any(beta < 0) or np.any(beta >= 1):
        raise ConfigError("mixture.beta_ij", "entries must lie in [0, 1)")
    return MixtureSpec(specs, temp, k_ij=k_ij, beta=beta)


def _mobility(doc, m: int) -> MobilitySpec:
    doc = _block(doc, "mobility", "mobility")
    try:
        kind = MobilityKind(doc["kind"])
    except ValueError:
        raise ConfigError("mobility.kind", f"expected one of {[k.value for k in MobilityKind]}") from None
    try:
        if kind is MobilityKind.DIAGONAL:
            key = "D_i" if "D_i" in doc else "D"
            if key not in doc:
                raise ConfigError("mobility.D_i", "required for diagonal mobility")
            return MobilitySpec.diagonal(_vector(doc[key], m, _join("mobility", key), positive=True))
        key = "D_ij" if "D_ij" in doc else "D"
        if key not in doc:
            raise ConfigError("mobility.D_ij", f"required for {kind.value} mobility")
        if m < 2:
            raise ConfigError("mobility.kind", f"{kind.value} mobility needs at least two components")
        return MobilitySpec(kind, d_ij=_matrix(doc[key], m, _join("mobility", key)))
    except MobilityConfigError as exc:
        raise ConfigError("mobility", str(exc)) from None


def _grid(doc) -> StaggeredGrid:
    doc = _block(doc, "grid", "grid")
    nx = _integer(doc["nx"], "grid.nx", 2)
    ny = _integer(doc["ny"], "grid.ny", 2)
    lx = _number(doc["lx_nm"], "grid.lx_nm", positive=True) * NM
    ly = _number(doc["ly_nm"], "grid.ly_nm", positive=True) * NM
    try:
        bc = BC(doc.get("bc", "no_flux"))
    except ValueError:
        raise ConfigError("grid.bc", f"expected one of {[b.value for b in BC]}") from None
    return StaggeredGrid(nx, ny, lx, ly, bc)


def _droplets(items, m: int, grid: StaggeredGrid) -> list[Droplet]:
    if items is None:
        return []
    if not isinstance(items, list):
        raise ConfigError("initial.droplets", "expected a list")
    out = []
    for k, item in enumerate(items):
        path = _join("initial.droplets", k)
        doc = _block(item, path, "droplet")
        center = _vector(doc["center_nm"], 2, _join(path, "center_nm")) * NM
        size = _vector(doc["size_nm"], 2, _join(path, "size_nm"), positive=True) * NM
        dens = _vector(doc["density_kmol_m3"], m, _join(path, "density_kmol_m3"), positive=True) * KMOL
        drop = Droplet((center[0], center[1]), (size[0], size[1]), dens)
        x0, x1, y0, y1 = drop.bounds()
        tol = 1e-12 * max(grid.lx, grid.ly)
        if x0 < -tol or y0 < -tol or x1 > grid.lx + tol or y1 > grid.ly + tol:
            raise ConfigError(path, "droplet extends outside the domain")
        for j, prev in enumerate(out):
            if drop.overlaps(prev):
                raise ConfigError(path, f"overlaps droplet {j}")
        out.append(drop)
    return out


def build_config(doc: dict[str, Any]) -> RunConfig:
    """Validate a parsed document and convert it to SI."""
    doc = _block(doc, "", "")
    mix = _mixture(doc["mixture"])
    m = mix.n_components
    mob = _mobility(doc["mobility"], m)
    scheme = doc.get("scheme", "coupled")
    if scheme not in SCHEMES:
        raise ConfigError("scheme", f"expected one of {list(SCHEMES)}")
    if scheme == "componentwise" and mob.kind is not MobilityKind.DIAGONAL:
        raise ConfigError("scheme", "componentwise scheme requires mobility.kind = diagonal")
    grid = _grid(doc["grid"])
    tdoc = _block(doc["time"], "time", "time")
    dt = _number(tdoc["dt"], "time.dt", positive=True)
    steps = _integer(tdoc["steps"], "time.steps", 0)
    c_t = _vector(doc.get("C_T", 0.0), m, "C_T", nonneg=True)
    vdoc = _block(doc.get("viscosity"), "viscosity", "viscosity")
    xi = _number(vdoc.get("xi", 1e-4), "viscosity.xi", positive=True)
    eta = _number(vdoc.get("eta", 1e-4), "viscosity.eta", positive=True)
    sdoc = _block(doc.get("solver"), "solver", "solver")
    tol = _number(sdoc.get("tol", DEFAULT_TOL), "solver.tol", positive=True)
    max_iter = sdoc.get("max_iter")
    if max_iter is not None:
        max_iter = _integer(max_iter, "solver.max_iter", 1)
    method = sdoc.get("method", "direct")
    if method not in ("direct", "bicgstab"):
        raise ConfigError("solver.method", "expected direct or bicgstab")
    try:
        sc = SchemeConfig(dt=dt, mobility=mob, xi=xi, eta=eta, c_t=c_t, tol=tol,
                          max_iter=max_iter, solver=method)
    except SchemeConfigError as exc:
        raise ConfigError("viscosity", str(exc)) from None
    idoc = _block(doc["initial"], "initial", "initial")
    background = _vector(idoc["background_kmol_m3"], m, "initial.background_kmol_m3", positive=True) * KMOL
    droplets = _droplets(idoc.get("droplets"), m, grid)
    odoc = _block(doc.get("output"), "output", "output")
    output = OutputConfig(Path(str(odoc.get("dir", "out"))),
                          _integer(odoc.get("snapshot_every", 0), "output.snapshot_every"),
                          _integer(odoc.get("energy_every", 1), "output.energy_every", 1))
    return RunConfig(mix, scheme, grid, steps, sc, background, droplets, output)


def parse_config(text: str) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed YAML: {exc}") from None
    return build_config(doc)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
