"""Tridiagonal and conjugate-gradient solves against dense references."""

import numpy as np
import pytest

from sislab import (Grid, LinearSolveError, NeumannOperator, OperatorSolver,
                    conjugate_gradient, factor_operator_1d)


def _dense(op):
    """Assemble the operator matrix column by column in flattened ordering."""
    shape = op.grid.shape
    n = int(np.prod(shape))
    A = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[:] = 0.0
        e[j] = 1.0
        A[:, j] = op.matvec(e.reshape(shape)).reshape(-1)
    return A


def test_tridiagonal_factor_matches_dense_solve():
    g = Grid(extents=(1.0,), cells=(16,))
    rng = np.random.default_rng(7)
    op = NeumannOperator(g, d=0.3, reaction=rng.uniform(0.5, 2.0, 16))
    fac = factor_operator_1d(op)
    A = _dense(op)
    for seed in range(3):
        b = np.random.default_rng(seed).standard_normal(16)
        x = fac.solve(b)
        assert np.allclose(x, np.linalg.solve(A, b), rtol=1e-12, atol=1e-14)


def test_tridiagonal_requires_spd():
    g = Grid(extents=(1.0,), cells=(8,))
    # zero reaction leaves a singular pure-Neumann stiffness matrix
    op = NeumannOperator(g, d=1.0, reaction=np.zeros(8))
    with pytest.raises(LinearSolveError):
        factor_operator_1d(op)


def test_cg_solves_spd_system():
    g = Grid(extents=(1.0, 2.0), cells=(6, 5))
    rng = np.random.default_rng(3)
    op = NeumannOperator(g, d=0.2, reaction=rng.uniform(1.0, 3.0, (6, 5)))
    A = _dense(op)
    b = rng.standard_normal(30)
    x, relres, iters = conjugate_gradient(
        lambda v: op.matvec(v.reshape(6, 5)).reshape(-1),
        b, op.diagonal().reshape(-1), tol=1e-12)
    assert relres <= 1e-12
    assert np.allclose(x, np.linalg.solve(A, b), rtol=1e-9, atol=1e-11)
    assert 0 < iters <= 20 * 30


def test_cg_zero_rhs_short_circuits():
    g = Grid(extents=(1.0,), cells=(4,))
    op = NeumannOperator(g, d=1.0, reaction=np.ones(4))
    x, relres, iters = conjugate_gradient(op.matvec, np.zeros(4), op.diagonal(),
                                          tol=1e-12)
    assert np.all(x == 0.0) and relres == 0.0 and iters == 0


def test_cg_reports_nonconvergence():
    g = Grid(extents=(1.0,), cells=(4,))
    op = NeumannOperator(g, d=1.0, reaction=np.ones(4))
    with pytest.raises(LinearSolveError):
        conjugate_gradient(op.matvec, np.ones(4), op.diagonal(),
                           tol=1e-16, maxiter=1)


def test_operator_solver_dispatch_and_residual_tracking():
    rng = np.random.default_rng(11)
    for extents, cells in [((1.0,), (12,)), ((1.0, 1.0), (5, 7))]:
        g = Grid(extents=extents, cells=cells)
        op = NeumannOperator(g, d=0.5, reaction=rng.uniform(0.5, 1.5, cells))
        solver = OperatorSolver(op, tol=1e-12)
        A = _dense(op)
        b = rng.standard_normal(cells)
        x = solver.solve(b)
        ref = np.linalg.solve(A, b.reshape(-1)).reshape(cells)
        assert np.allclose(x, ref, rtol=1e-9, atol=1e-11)
        res = np.linalg.norm((op.matvec(x) - b).reshape(-1))
        res /= np.linalg.norm(b.reshape(-1))
        assert res <= 1e-10
        assert solver.last_relative_residual <= 1e-10


def test_operator_solver_deterministic():
    g = Grid(extents=(1.0, 1.0), cells=(8, 8))
    op = NeumannOperator(g, d=0.1,
                         reaction=np.linspace(0.5, 2.0, 64).reshape(8, 8))
    b = np.sin(np.arange(64.0)).reshape(8, 8)
    xs = [OperatorSolver(op, tol=1e-12).solve(b) for _ in range(2)]
    assert np.array_equal(xs[0], xs[1])
