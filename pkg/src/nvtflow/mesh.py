"""Uniform 2D MAC (staggered) grid and its discrete operators.

Scalars live at cell centres in arrays of shape ``(nx, ny)`` indexed
``[i, j]`` with ``i`` along x.  Face quantities are held in a
:class:`FaceField`: ``x`` values on the ``(nx+1, ny)`` vertical faces and
``y`` values on the ``(nx, ny+1)`` horizontal faces.

Under periodic boundaries the last face in each direction duplicates the
first one.  Its value is kept equal to the owner face; divergence reads
only owner faces and the face inner product gives duplicates zero weight,
so ``grad_cc`` and ``-div_fc`` are exact adjoints for any face field.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class BC(str, enum.Enum):
    NO_FLUX = "no_flux"  # u = 0, J.n = 0, grad n . n = 0
    PERIODIC = "periodic"


@dataclass
class FaceField:
    x: np.ndarray
    y: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.y.ravel()])

    @classmethod
    def from_flat(cls, grid: "StaggeredGrid", vec) -> "FaceField":
        vec = np.asarray(vec)
        nfx = grid.n_xfaces
        return cls(vec[:nfx].reshape(grid.nx + 1, grid.ny).copy(),
                   vec[nfx:].reshape(grid.nx, grid.ny + 1).copy())

    @classmethod
    def zeros(cls, grid: "StaggeredGrid") -> "FaceField":
        return cls(np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def copy(self) -> "FaceField":
        return FaceField(self.x.copy(), self.y.copy())

    def __add__(self, other: "FaceField") -> "FaceField":
        return FaceField(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "FaceField") -> "FaceField":
        return FaceField(self.x - other.x, self.y - other.y)

    def scaled(self, factor) -> "FaceField":
        """Multiply by a scalar or by a face-shaped flat array."""
        if np.ndim(factor) == 0:
            return FaceField(self.x * factor, self.y * factor)
        grid_like = np.asarray(factor)
        nfx = self.x.size
        return FaceField(self.x * grid_like[:nfx].reshape(self.x.shape),
                         self.y * grid_like[nfx:].reshape(self.y.shape))


@dataclass(frozen=True)
class StaggeredGrid:
    nx: int
    ny: int
    lx: float
    ly: float
    bc: BC = BC.NO_FLUX

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2x2 cells")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")
        object.__setattr__(self, "bc", BC(self.bc))

    # -- geometry -------------------------------------------------------
    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_xfaces(self) -> int:
        return (self.nx + 1) * self.ny

    @property
    def n_yfaces(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def n_faces(self) -> int:
        return self.n_xfaces + self.n_yfaces

    @property
    def periodic(self) -> bool:
        return self.bc is BC.PERIODIC

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def xface_centers(self):
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def yface_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    # -- index maps -----------------------------------------------------
    def cell_index(self, i, j):
        return np.asarray(i) * self.ny + np.asarray(j)

    def xface_index(self, i, j):
        return np.asarray(i) * self.ny + np.asarray(j)

    def yface_index(self, i, j):
        return self.n_xfaces + np.asarray(i) * (self.ny + 1) + np.asarray(j)

    @cached_property
    def _face_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat indices of the cells on the low and high side of every face.

        Wall faces under no-flux get the single adjacent cell on both sides.
        """
        nx, ny = self.nx, self.ny
        i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny), indexing="ij")
        if self.periodic:
            lo_i, hi_i = (i - 1) % nx, i % nx
        else:
            lo_i, hi_i = np.clip(i - 1, 0, nx - 1), np.clip(i, 0, nx - 1)
        xl, xh = self.cell_index(lo_i, j), self.cell_index(hi_i, j)
        i, j = np.meshgrid(np.arange(nx), np.arange(ny + 1), indexing="ij")
        if self.periodic:
            lo_j, hi_j = (j - 1) % ny, j % ny
        else:
            lo_j, hi_j = np.clip(j - 1, 0, ny - 1), np.clip(j, 0, ny - 1)
        yl, yh = self.cell_index(i, lo_j), self.cell_index(i, hi_j)
        return (np.concatenate([xl.ravel(), yl.ravel()]),
                np.concatenate([xh.ravel(), yh.ravel()]))

    @cached_property
    def face_spacing(self) -> np.ndarray:
        return np.concatenate([np.full(self.n_xfaces, self.hx), np.full(self.n_yfaces, self.hy)])

    @cached_property
    def face_owner(self) -> np.ndarray:
        """Owner face for every face (identity except periodic duplicates)."""
        nx, ny = self.nx, self.ny
        i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny), indexing="ij")
        ox = self.xface_index(i % nx if self.periodic else i, j)
        i, j = np.meshgrid(np.arange(nx), np.arange(ny + 1), indexing="ij")
        oy = self.yface_index(i, j % ny if self.periodic else j)
        return np.concatenate([ox.ravel(), oy.ravel()])

    @cached_property
    def face_weights(self) -> np.ndarray:
        """Quadrature weight (control-volume area) of each face."""
        w = np.full(self.n_faces, self.cell_volume)
        w[self.face_owner != np.arange(self.n_faces)] = 0.0
        return w

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        """Mask of faces whose value is not a free unknown.

        No-flux: faces on the walls (normal velocity pinned to zero).
        Periodic: duplicate faces.
        """
        mask = np.zeros(self.n_faces, dtype=bool)
        if self.periodic:
            mask[self.face_owner != np.arange(self.n_faces)] = True
            return mask
        nx, ny = self.nx, self.ny
        jj = np.arange(ny)
        mask[self.xface_index(0, jj)] = True
        mask[self.xface_index(nx, jj)] = True
        ii = np.arange(nx)
        mask[self.yface_index(ii, 0)] = True
        mask[self.yface_index(ii, ny)] = True
        return mask

    # -- sparse operators -----------------------------------------------
    @cached_property
    def grad_matrix(self) -> sp.csr_matrix:
        lo, hi = self._face_cells
        h = self.face_spacing
        rows = np.arange(self.n_faces)
        vals = 1.0 / h
        vals = np.where(lo == hi, 0.0, vals)
        mat = sp.coo_matrix(
            (np.concatenate([vals, -vals]), (np.concatenate([rows, rows]), np.concatenate([hi, lo]))),
            shape=(self.n_faces, self.n_cells))
        return mat.tocsr()

    @cached_property
    def div_matrix(self) -> sp.csr_matrix:
        nx, ny = self.nx, self.ny
        i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        c = self.cell_index(i, j).ravel()
        own = self.face_owner
        east = own[self.xface_index(i + 1, j).ravel()]
        west = own[self.xface_index(i, j).ravel()]
        north = own[self.yface_index(i, j + 1).ravel()]
        south = own[self.yface_index(i, j).ravel()]
        rows = np.concatenate([c, c, c, c])
        cols = np.concatenate([east, west, north, south])
        vals = np.concatenate([np.full(c.size, 1 / self.hx), np.full(c.size, -1 / self.hx),
                               np.full(c.size, 1 / self.hy), np.full(c.size, -1 / self.hy)])
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.n_cells, self.n_faces)).tocsr()

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        return (self.div_matrix @ self.grad_matrix).tocsr()

    @cached_property
    def interp_matrix(self) -> sp.csr_matrix:
        lo, hi = self._face_cells
        rows = np.arange(self.n_faces)
        return sp.coo_matrix((np.full(2 * self.n_faces, 0.5),
                              (np.concatenate([rows, rows]), np.concatenate([lo, hi]))),
                             shape=(self.n_faces, self.n_cells)).tocsr()

    def sync(self, v: FaceField) -> FaceField:
        """Copy owner values onto periodic duplicate faces."""
        flat = v.flat()
        return FaceField.from_flat(self, flat[self.face_owner])


def _cells(q, grid: StaggeredGrid) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != grid.shape:
        raise ValueError(f"cell field shape {q.shape} does not match grid {grid.shape}")
    return q.ravel()


def _faces(v: FaceField, grid: StaggeredGrid) -> np.ndarray:
    if v.x.shape != (grid.nx + 1, grid.ny) or v.y.shape != (grid.nx, grid.ny + 1):
        raise ValueError("face field does not match grid")
    return v.flat()


def grad_cc(q, grid: StaggeredGrid) -> FaceField:
    """Face-normal gradient of a cell field; zero on no-flux walls."""
    return FaceField.from_flat(grid, grid.grad_matrix @ _cells(q, grid))


def div_fc(v: FaceField, grid: StaggeredGrid) -> np.ndarray:
    """Cell divergence of a face field."""
    return (grid.div_matrix @ _faces(v, grid)).reshape(grid.shape)


def laplacian(q, grid: StaggeredGrid) -> np.ndarray:
    return (grid.laplacian_matrix @ _cells(q, grid)).reshape(grid.shape)


def face_interp(q, grid: StaggeredGrid) -> FaceField:
    """Arithmetic mean of the two adjacent cells (the wall cell on walls)."""
    return FaceField.from_flat(grid, grid.interp_matrix @ _cells(q, grid))


def face_inner(a: FaceField, b: FaceField, grid: StaggeredGrid) -> float:
    return float(np.sum(grid.face_weights * _faces(a, grid) * _faces(b, grid)))


def cell_inner(q, r, grid: StaggeredGrid) -> float:
    return float(np.sum(_cells(q, grid) * _cells(r, grid)) * grid.cell_volume)


def adjointness_check(q, v: FaceField, grid: StaggeredGrid) -> float:
    """Relative residual of (grad q, v)_faces + (q, div v)_cells.

    Vanishes to round-off for periodic grids and for face fields with zero
    normal values on no-flux walls.  The result is normalised by the sum of
    absolute values of the individual products.
    """
    qf = _cells(q, grid)
    vf = _faces(v, grid)
    face_terms = grid.face_weights * (grid.grad_matrix @ qf) * vf
    cell_terms = grid.cell_volume * qf * (grid.div_matrix @ vf)
    scale = np.sum(np.abs(face_terms)) + np.sum(np.abs(cell_terms))
    if scale == 0.0:
        return 0.0
    return float(abs(face_terms.sum() + cell_terms.sum()) / scale)


def upwind_face_values(q, v: FaceField, grid: StaggeredGrid) -> FaceField:
    """Donor-cell face values of ``q`` selected by the sign of ``v``.

    Faces with ``v == 0`` take the arithmetic mean.
    """
    qf = _cells(q, grid)
    vf = _faces(v, grid)
    lo, hi = grid._face_cells
    vals = np.where(vf > 0, qf[lo], np.where(vf < 0, qf[hi], 0.5 * (qf[lo] + qf[hi])))
    return FaceField.from_flat(grid, vals)


def upwind_convect(n, v: FaceField, grid: StaggeredGrid) -> np.ndarray:
    """Donor-cell discretisation of div(n v)."""
    donor = upwind_face_values(n, v, grid)
    flux = _faces(v, grid) * donor.flat()
    return (grid.div_matrix @ flux).reshape(grid.shape)


# ---------------------------------------------------------------------------
# momentum operators on face unknowns
# ---------------------------------------------------------------------------

@dataclass
class MomentumOperators:
    """Linear operators acting on face velocities (flat, full face layout).

    ``viscous`` discretises grad(lam div u) + div(eta (grad u + grad u^T))
    for constant coefficients as ``eta * Lap_faces + (lam + eta) * G D``.
    Rows of boundary faces (walls or periodic duplicates) are empty; use
    :meth:`pin_rows` when assembling a solvable system.
    """

    grid: StaggeredGrid
    rho_faces: np.ndarray
    eta: float
    lam: float
    viscous: sp.csr_matrix

    def convection(self, mass_flux: FaceField) -> sp.csr_matrix:
        """Upwind non-conservative convection (m . grad) u on face control volumes.

        ``mass_flux`` lives on cell faces; fluxes through the sides of each
        face control volume are means of the two cell-face fluxes they
        straddle, so the face-volume mass balance matches the cell one.
        """
        return _convection_matrix(self.grid, mass_flux)

    def pin_rows(self, mat: sp.spmatrix) -> sp.csr_matrix:
        # scale constraint rows like the interior diagonal so LU keeps them exact
        scale = float(np.max(np.abs(mat.diagonal()))) or 1.0
        return _pin_rows(self.grid, mat, scale)


def _free_rows(grid: StaggeredGrid) -> sp.csr_matrix:
    return sp.diags((~grid.boundary_faces).astype(float))


def _pin_rows(grid: StaggeredGrid, mat: sp.spmatrix, scale: float = 1.0) -> sp.csr_matrix:
    """Zero boundary rows of ``mat`` and replace them by value constraints.

    Wall faces get u = 0; periodic duplicates get u_dup - u_owner = 0.
    """
    free = _free_rows(grid)
    bnd = np.flatnonzero(grid.boundary_faces)
    own = grid.face_owner[bnd]
    rows = np.concatenate([bnd, bnd[own != bnd]])
    cols = np.concatenate([bnd, own[own != bnd]])
    vals = np.concatenate([np.ones(bnd.size), -np.ones(int(np.sum(own != bnd)))])
    pin = sp.coo_matrix((scale * vals, (rows, cols)), shape=(grid.n_faces, grid.n_faces))
    return (free @ mat + pin).tocsr()


def _face_laplacian(grid: StaggeredGrid) -> sp.csr_matrix:
    """Component-wise 5-point Laplacian of face velocities.

    Tangential no-slip on walls uses the reflected ghost value -u, giving
    the wall distance hy/2 (or hx/2) for the tangential component.
    """
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    per = grid.periodic
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(np.ravel(r))
        cols.append(np.ravel(c))
        vals.append(np.broadcast_to(np.ravel(v) if np.ndim(v) else v, np.shape(np.ravel(r))).astype(float))

    # x-velocity on x-faces
    i_rng = np.arange(nx) if per else np.arange(1, nx)
    i, j = np.meshgrid(i_rng, np.arange(ny), indexing="ij")
    r = grid.xface_index(i, j)
    diag = np.full(i.shape, -2 / hx ** 2 - 2 / hy ** 2)
    for di in (-1, 1):
        ii = (i + di) % nx if per else i + di
        add(r, grid.xface_index(ii, j), 1 / hx ** 2)
    for dj in (-1, 1):
        jj = j + dj
        if per:
            add(r, grid.xface_index(i, jj % ny), 1 / hy ** 2)
        else:
            inside = (jj >= 0) & (jj < ny)
            add(r[inside], grid.xface_index(i[inside], jj[inside]), 1 / hy ** 2)
            diag = diag - np.where(inside, 0.0, 1 / hy ** 2)
    add(r, r, diag)

    # y-velocity on y-faces
    j_rng = np.arange(ny) if per else np.arange(1, ny)
    i, j = np.meshgrid(np.arange(nx), j_rng, indexing="ij")
    r = grid.yface_index(i, j)
    diag = np.full(i.shape, -2 / hx ** 2 - 2 / hy ** 2)
    for dj in (-1, 1):
        jj = (j + dj) % ny if per else j + dj
        add(r, grid.yface_index(i, jj), 1 / hy ** 2)
    for di in (-1, 1):
        ii = i + di
        if per:
            add(r, grid.yface_index(ii % nx, j), 1 / hx ** 2)
        else:
            inside = (ii >= 0) & (ii < nx)
            add(r[inside], grid.yface_index(ii[inside], j[inside]), 1 / hx ** 2)
            diag = diag - np.where(inside, 0.0, 1 / hx ** 2)
    add(r, r, diag)

    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(grid.n_faces, grid.n_faces)).tocsr()


def _convection_matrix(grid: StaggeredGrid, mass_flux: FaceField) -> sp.csr_matrix:
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    per = grid.periodic
    mx, my = mass_flux.x, mass_flux.y
    rows, cols, vals = [], [], []

    def side(r, nb, f_out, inv_len, valid):
        inflow = np.maximum(-f_out, 0.0) * inv_len * valid
        rows.append(r.ravel())
        cols.append(r.ravel())
        vals.append(inflow.ravel())
        rows.append(r.ravel())
        cols.append(nb.ravel())
        vals.append(-inflow.ravel())

    # x-face control volumes: cells (i-1, j) and (i, j)
    i_rng = np.arange(nx) if per else np.arange(1, nx)
    i, j = np.meshgrid(i_rng, np.arange(ny), indexing="ij")
    r = grid.xface_index(i, j)
    im, ip = (i - 1) % nx, (i + 1) % nx if per else i + 1
    ip_flux = ip if per else i + 1
    ones = np.ones(i.shape)
    side(r, grid.xface_index(ip, j), 0.5 * (mx[i, j] + mx[ip_flux, j]), 1 / hx, ones)
    side(r, grid.xface_index(im if per else i - 1, j),
         -0.5 * (mx[im if per else i - 1, j] + mx[i, j]), 1 / hx, ones)
    for dj in (1, 0):  # north uses y-face row j+1, south uses row j
        jr = j + dj
        flux = 0.5 * (my[im if per else i - 1, jr] + my[i, jr])
        jn = j + (1 if dj else -1)
        if per:
            valid = ones
            nb = grid.xface_index(i, jn % ny)
        else:
            valid = ((jn >= 0) & (jn < ny)).astype(float)
            nb = grid.xface_index(i, np.clip(jn, 0, ny - 1))
        side(r, nb, flux if dj else -flux, 1 / hy, valid)

    # y-face control volumes: cells (i, j-1) and (i, j)
    j_rng = np.arange(ny) if per else np.arange(1, ny)
    i, j = np.meshgrid(np.arange(nx), j_rng, indexing="ij")
    r = grid.yface_index(i, j)
    jm = (j - 1) % ny if per else j - 1
    jp = (j + 1) % ny if per else j + 1
    ones = np.ones(i.shape)
    side(r, grid.yface_index(i, jp), 0.5 * (my[i, j] + my[i, j + 1]), 1 / hy, ones)
    side(r, grid.yface_index(i, jm), -0.5 * (my[i, jm] + my[i, j]), 1 / hy, ones)
    for di in (1, 0):
        ir = i + di
        flux = 0.5 * (mx[ir, jm] + mx[ir, j])
        inb = i + (1 if di else -1)
        if per:
            valid = ones
            nb = grid.yface_index(inb % nx, j)
        else:
            valid = ((inb >= 0) & (inb < nx)).astype(float)
            nb = grid.yface_index(np.clip(inb, 0, nx - 1), j)
        side(r, nb, flux if di else -flux, 1 / hx, valid)

    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(grid.n_faces, grid.n_faces)).tocsr()


def momentum_operators(grid: StaggeredGrid, rho_faces, eta: float, lam: float) -> MomentumOperators:
    if not eta > 0:
        raise ValueError("shear viscosity eta must be positive")
    if not lam > 0:
        raise ValueError("lambda = xi - 2/3 eta must be positive")
    rho_faces = np.asarray(rho_faces.flat() if isinstance(rho_faces, FaceField) else rho_faces, dtype=float)
    lap = _face_laplacian(grid)
    gd = grid.grad_matrix @ grid.div_matrix
    visc = _free_rows(grid) @ (eta * lap + (lam + eta) * gd)
    return MomentumOperators(grid, rho_faces, eta, lam, sp.csr_matrix(visc))
