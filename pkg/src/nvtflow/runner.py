"""Initial conditions, the time loop, and droplet shape metrics."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import componentwise, coupled
from .config import Droplet, RunConfig
from .energy import EnergyRecord, assert_dissipation, energy_record
from .interface import influence_matrix
from .io import EnergyLog, write_snapshot
from .mesh import StaggeredGrid
from .state import FieldState, initial_state

logger = logging.getLogger(__name__)

STEPPERS = {"coupled": coupled.step, "componentwise": componentwise.step}


class EnergyViolation(RuntimeError):
    def __init__(self, step: int, rel: float):
        self.step = step
        super().__init__(f"modified total energy increased at step {step} (relative {rel:.3e})")


def droplet_mask(drop: Droplet, grid: StaggeredGrid) -> np.ndarray:
    """Cells whose centre lies strictly inside the droplet rectangle."""
    x, y = grid.cell_centers()
    x0, x1, y0, y1 = drop.bounds()
    return (x > x0) & (x < x1) & (y > y0) & (y < y1)


def initial_densities(config: RunConfig) -> np.ndarray:
    grid = config.grid
    n = np.broadcast_to(config.background[:, None, None], (len(config.background),) + grid.shape).copy()
    for drop in config.droplets:
        mask = droplet_mask(drop, grid)
        n[:, mask] = drop.density[:, None]
    return n


def build_initial_state(config: RunConfig) -> FieldState:
    return initial_state(initial_densities(config), config.mixture, config.grid, config.c_t)


def liquid_indicator(n, config: RunConfig, component: int | None = None) -> np.ndarray:
    """Normalised density of the heaviest component: 0 at gas, 1 at liquid."""
    k = int(np.argmax(config.mixture.molar_weights)) if component is None else component
    if not config.droplets:
        raise ValueError("liquid indicator needs at least one droplet")
    gas = config.background[k]
    liq = config.droplets[0].density[k]
    return (np.asarray(n)[k] - gas) / (liq - gas)


def corner_cells(drop: Droplet, grid: StaggeredGrid) -> list[tuple[int, int]]:
    idx = np.argwhere(droplet_mask(drop, grid))
    i0, j0 = idx.min(axis=0)
    i1, j1 = idx.max(axis=0)
    return [(i0, j0), (i0, j1), (i1, j0), (i1, j1)]


def corner_occupancy(n, config: RunConfig, drop_index: int = 0) -> float:
    """Sum of the liquid indicator over the four corner cells of a droplet."""
    ind = liquid_indicator(n, config)
    return float(sum(ind[c] for c in corner_cells(config.droplets[drop_index], config.grid)))


def liquid_regions(n, config: RunConfig, threshold: float = 0.5) -> int:
    """Number of 4-connected regions where the liquid indicator exceeds ``threshold``."""
    _, count = ndimage.label(liquid_indicator(n, config) > threshold)
    return int(count)


@dataclass
class RunResult:
    state: FieldState
    records: list[EnergyRecord] = field(default_factory=list)
    snapshots: list[Path] = field(default_factory=list)


def simulate(config: RunConfig, steps: int | None = None, out_dir=None, strict_energy: bool = False,
             tol_rel: float = 1e-10, write: bool = True, callback=None) -> RunResult:
    """Advance ``steps`` steps (default from config); energy is recorded every step.

    ``energies.csv`` gets a row every ``output.energy_every`` steps and
    snapshots are written every ``output.snapshot_every`` steps (0 = first
    and last only).
    """
    steps = config.steps if steps is None else steps
    out = Path(out_dir) if out_dir is not None else config.output.dir
    mix, grid, sc = config.mixture, config.grid, config.scheme_config
    stepper = STEPPERS[config.scheme]
    c = influence_matrix(mix)
    state = build_initial_state(config)
    result = RunResult(state)
    log = EnergyLog(out / "energies.csv") if write else None
    snap_every = config.output.snapshot_every
    energy_every = config.output.energy_every

    def snapshot(st):
        if write:
            path, _ = write_snapshot(st, grid, out / f"snapshot_{st.step:06d}.vtk", names=mix.names)
            result.snapshots.append(path)

    try:
        rec = energy_record(state, mix, c, sc.c_t, grid)
        result.records.append(rec)
        if log:
            log.write(rec)
        snapshot(state)
        for k in range(1, steps + 1):
            state = stepper(state, mix, sc, grid)
            rec = energy_record(state, mix, c, sc.c_t, grid)
            prev = result.records[-1]
            result.records.append(rec)
            if log and (k % energy_every == 0 or k == steps):
                log.write(rec)
            if snap_every and k % snap_every == 0 or k == steps:
                snapshot(state)
            verdict = assert_dissipation([prev, rec], tol_rel=tol_rel)
            if not verdict:
                logger.warning("step %d: modified energy rose by %.3e (relative)", k,
                               verdict.worst_relative_increase)
                if strict_energy:
                    raise EnergyViolation(k, verdict.worst_relative_increase)
            if callback is not None:
                callback(state, rec)
    finally:
        if log:
            log.close()
    result.state = state
    return result
