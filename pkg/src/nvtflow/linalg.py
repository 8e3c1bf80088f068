"""Sparse linear solves with a residual-based acceptance contract."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    """A linear solve failed to meet its residual contract."""


class PivotError(SolverError):
    """Degenerate Schur complement in a bordered solve."""


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    method: str = "direct"


def _relres(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    if nb == 0.0:
        return float(r)
    return float(r / nb)


class _Factor:
    """Reusable solver for one matrix: sparse LU or Jacobi-BiCGSTAB."""

    def __init__(self, A, method: str, tol: float, max_iter: int | None):
        self.A = sp.csr_matrix(A)
        n, m = self.A.shape
        if n != m:
            raise ValueError(f"matrix must be square, got {self.A.shape}")
        self.method = method
        self.tol = tol
        self.max_iter = max_iter if max_iter is not None else 10 * n
        self.lu = None
        self.singular = False
        if method == "direct":
            try:
                self.lu = spla.splu(self.A.tocsc())
            except RuntimeError as exc:  # exactly singular
                logger.debug("LU factorisation failed: %s", exc)
                self.singular = True
        elif method == "bicgstab":
            d = self.A.diagonal()
            d = np.where(d == 0.0, 1.0, d)
            self.prec = sp.diags(1.0 / d)
        else:
            raise ValueError(f"unknown solver method {method!r}")

    def __call__(self, b) -> tuple[np.ndarray, SolveReport]:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.A.shape[0],):
            raise ValueError(f"rhs has shape {b.shape}, matrix is {self.A.shape}")
        if self.method == "direct":
            if self.singular:
                return np.full_like(b, np.nan), SolveReport(0, np.inf, False, "direct")
            x = self.lu.solve(b)
            iters = 1
        else:
            count = [0]

            def cb(_):
                count[0] += 1

            x, _info = spla.bicgstab(self.A, b, rtol=self.tol, atol=0.0, maxiter=self.max_iter,
                                     M=self.prec, callback=cb)
            iters = count[0]
        if not np.all(np.isfinite(x)):
            return x, SolveReport(iters, np.inf, False, self.method)
        res = _relres(self.A, x, b)
        return x, SolveReport(iters, res, bool(res <= self.tol), self.method)


def solve(A, rhs, tol: float = DEFAULT_TOL, max_iter: int | None = None,
          method: str = "direct") -> tuple[np.ndarray, SolveReport]:
    """Solve ``A x = rhs``; ``report.converged`` is True iff the relative
    residual is at most ``tol``."""
    return _Factor(A, method, tol, max_iter)(rhs)


def solve_bordered(A, g, w, sigma: float, rhs, rhs_h: float, tol: float = DEFAULT_TOL,
                   max_iter: int | None = None, method: str = "direct"):
    """Solve the bordered system ``[[A, g], [w^T, sigma]] [x; h] = [rhs; rhs_h]``.

    Block elimination with two solves against ``A``. Returns ``(x, h, report)``;
    the reported residual is that of the full bordered system.

    Raises
    ------
    PivotError
        If the scalar Schur complement ``sigma - w^T A^{-1} g`` is degenerate.
    SolverError
        If either inner solve or the bordered residual misses ``tol``.
    """
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    fac = _Factor(A, method, tol, max_iter)
    # tighten inner solves so the assembled residual still meets tol
    fac.tol = tol * 1e-2 if method != "direct" else tol
    x0, r0 = fac(rhs)
    if np.any(g):
        x1, r1 = fac(g)
    else:
        x1, r1 = np.zeros_like(g), SolveReport(0, 0.0, True, method)
    if not (r0.converged and r1.converged):
        raise SolverError(f"inner solve failed (residuals {r0.residual:.3e}, {r1.residual:.3e})")
    schur = sigma - w @ x1
    scale = abs(sigma) + np.linalg.norm(w) * np.linalg.norm(x1)
    if abs(schur) <= 1e-14 * max(scale, np.finfo(float).tiny):
        raise PivotError(f"bordered pivot degenerate: {schur!r}")
    h = (rhs_h - w @ x0) / schur
    x = x0 - h * x1
    full_res = np.concatenate([fac.A @ x + g * h - rhs, [w @ x + sigma * h - rhs_h]])
    full_rhs = np.concatenate([rhs, [rhs_h]])
    denom = np.linalg.norm(full_rhs)
    res = float(np.linalg.norm(full_res) / denom) if denom > 0 else float(np.linalg.norm(full_res))
    report = SolveReport(r0.iterations + r1.iterations, res, res <= tol, method)
    if not report.converged:
        raise SolverError(f"bordered residual {res:.3e} exceeds tol {tol:.1e}")
    return x, float(h), report
