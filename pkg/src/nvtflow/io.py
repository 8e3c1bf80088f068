"""Snapshot and energy-log writers (legacy VTK, CSV)."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .energy import EnergyRecord
from .mesh import FaceField, StaggeredGrid
from .state import FieldState

_FMT = "%.17g"


def cell_velocity(u: FaceField, grid: StaggeredGrid) -> tuple[np.ndarray, np.ndarray]:
    """Average face velocities onto cell centres."""
    return 0.5 * (u.x[:-1, :] + u.x[1:, :]), 0.5 * (u.y[:, :-1] + u.y[:, 1:])


def write_snapshot(state: FieldState, grid: StaggeredGrid, path, names=None) -> tuple[Path, Path]:
    """Write ``path`` (.vtk) and a sibling .csv; return both paths."""
    path = Path(path)
    if path.suffix != ".vtk":
        path = path.with_suffix(".vtk")
    path.parent.mkdir(parents=True, exist_ok=True)
    m = len(state.n)
    names = list(names) if names is not None else [f"n_{k + 1}" for k in range(m)]
    uc, vc = cell_velocity(state.u, grid)
    # VTK point ordering runs x fastest, so transpose from [i, j] to [j, i]
    lines = ["# vtk DataFile Version 3.0",
             f"nvtflow step {state.step} t={state.t:.17g} H={state.H:.17g}",
             "ASCII", "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} 1",
             "ORIGIN 0 0 0",
             f"SPACING {grid.hx:.17g} {grid.hy:.17g} 1",
             f"CELL_DATA {grid.n_cells}"]
    for name, q in zip(names, state.n):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_FMT % v for v in q.T.ravel()]
    lines.append("VECTORS velocity double")
    lines += [f"{_FMT % a} {_FMT % b} 0" for a, b in zip(uc.T.ravel(), vc.T.ravel())]
    path.write_text("\n".join(lines) + "\n")

    csv_path = path.with_suffix(".csv")
    x, y = grid.cell_centers()
    cols = [x.ravel(), y.ravel()] + [q.ravel() for q in state.n] + [uc.ravel(), vc.ravel()]
    header = ",".join(["x", "y"] + names + ["u", "v"])
    np.savetxt(csv_path, np.column_stack(cols), delimiter=",", fmt=_FMT, header=header, comments="")
    return path, csv_path


def read_snapshot_csv(path, grid: StaggeredGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(n, u_cell, v_cell)`` from a snapshot CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    m = data.shape[1] - 4
    n = np.stack([data[:, 2 + k].reshape(grid.shape) for k in range(m)])
    return n, data[:, -2].reshape(grid.shape), data[:, -1].reshape(grid.shape)


def read_snapshot_vtk(path, grid: StaggeredGrid) -> dict[str, np.ndarray]:
    """Parse the cell arrays of a snapshot written by :func:`write_snapshot`."""
    lines = Path(path).read_text().splitlines()
    out: dict[str, np.ndarray] = {}
    k = 0
    nc = grid.n_cells
    while k < len(lines):
        parts = lines[k].split()
        if parts and parts[0] == "SCALARS":
            vals = np.array([float(v) for v in lines[k + 2:k + 2 + nc]])
            out[parts[1]] = vals.reshape(grid.ny, grid.nx).T
            k += 2 + nc
        elif parts and parts[0] == "VECTORS":
            vals = np.array([[float(t) for t in ln.split()] for ln in lines[k + 1:k + 1 + nc]])
            out[parts[1]] = np.stack([vals[:, 0].reshape(grid.ny, grid.nx).T,
                                      vals[:, 1].reshape(grid.ny, grid.nx).T])
            k += 1 + nc
        else:
            k += 1
    return out


class EnergyLog:
    """Append-only energies.csv writer; flushes every row."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(EnergyRecord.columns())

    def write(self, rec: EnergyRecord):
        self._w.writerow([rec.step] + [repr(float(v)) for v in rec.row()[1:]])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_energies(path) -> list[EnergyRecord]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return [EnergyRecord(step=int(r["step"]), **{k: float(r[k]) for k in EnergyRecord.columns()[1:]})
            for r in rows]
