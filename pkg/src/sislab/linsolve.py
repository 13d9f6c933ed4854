"""Deterministic linear solves for the implicit pieces of the scheme.

All systems assembled in this package are symmetric positive definite: the
implicit diffusion matrix Id + dt*d*K, the shifted spectral matrices, and the
monotone-iteration matrix d*K + c*Id (K is the Neumann stiffness).  In 1d
they are tridiagonal and solved directly through LAPACK's LDL^T
factorization for positive definite tridiagonals, with the factorization
cached and reused across the many solves of a time loop.  In 2d we run a
hand-rolled Jacobi-preconditioned conjugate gradient: matvec-based, fixed
reduction order, no randomness, so reruns produce bit-identical iterates.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .grid import NeumannOperator


class LinearSolveError(RuntimeError):
    """An inner linear solve failed to reach its tolerance (or the matrix was
    not positive definite where the algorithm requires it)."""


class TridiagonalFactor:
    """Cached LDL^T factorization of a positive definite tridiagonal matrix."""

    def __init__(self, diag: np.ndarray, sub: np.ndarray):
        d, e, info = lapack.dpttrf(np.ascontiguousarray(diag, dtype=float),
                                   np.ascontiguousarray(sub, dtype=float))
        if info != 0:
            raise LinearSolveError(
                f"tridiagonal factorization failed (info={info}); "
                "matrix is not positive definite")
        self._d = d
        self._e = e

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = lapack.dpttrs(self._d, self._e, np.ascontiguousarray(rhs, float))
        if info != 0:
            raise LinearSolveError(f"tridiagonal solve failed (info={info})")
        return x


def factor_operator_1d(op: NeumannOperator) -> TridiagonalFactor:
    """Factor a 1d NeumannOperator (must be positive definite)."""
    ab = op.tridiagonal_bands()
    return TridiagonalFactor(ab[1, :], ab[2, :-1])


def conjugate_gradient(matvec, b: np.ndarray, diag: np.ndarray,
                       tol: float, maxiter: int | None = None) -> tuple[np.ndarray, float, int]:
    """Jacobi-preconditioned CG for SPD matvec; returns (x, relres, iters).

    Stops when ||b - A x||_2 <= tol * ||b||_2.  The zero right-hand side
    returns zero immediately.  Raises LinearSolveError when the iteration cap
    (default 20 * n) is exhausted, reporting the achieved residual.
    """
    b = np.asarray(b, dtype=float)
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b), 0.0, 0
    if maxiter is None:
        maxiter = max(200, 20 * b.size)
    inv_diag = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(np.vdot(r, z))
    for k in range(1, maxiter + 1):
        Ap = matvec(p)
        alpha = rz / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        relres = float(np.linalg.norm(r)) / norm_b
        if relres <= tol:
            return x, relres, k
        z = inv_diag * r
        rz_next = float(np.vdot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise LinearSolveError(
        f"CG did not reach tol={tol:g} in {maxiter} iterations "
        f"(residual {relres:g})")


class OperatorSolver:
    """Uniform 'solve A x = rhs' front end over a NeumannOperator.

    1d instances factor once and reuse; 2d instances run preconditioned CG
    per solve.  The operator must be positive definite.
    """

    def __init__(self, op: NeumannOperator, tol: float = 1e-12):
        self.op = op
        self.tol = float(tol)
        self._factor = factor_operator_1d(op) if op.grid.dim == 1 else None
        self._diag = None if self._factor is not None else op.diagonal()
        self.last_relative_residual = 0.0
        self.last_iterations = 0

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._factor is not None:
            x = self._factor.solve(rhs)
            self.last_iterations = 0
            return x
        shape = self.op.grid.shape
        x, relres, iters = conjugate_gradient(
            lambda v: self.op.matvec(v.reshape(shape)).reshape(-1),
            rhs.reshape(-1), self._diag.reshape(-1), self.tol)
        self.last_relative_residual = relres
        self.last_iterations = iters
        return x.reshape(shape)
