"""Basic reproduction number and the principal eigenvalue it mirrors.

With linear incidence in I, linearizing the infection equation at the
disease-free state S = N/|Omega| gives the weighted Rayleigh quotient

    R0 = sup over phi of
         integral( (N/|Omega|)^q beta phi^2 )
         / integral( d_I |grad phi|^2 + gamma phi^2 ),

a generalized eigenvalue problem B phi = rho A phi with A = d_I K + gamma
(symmetric positive definite) and B the multiplication by the weighted beta.
The companion linear stability problem is the smallest eigenvalue lambda* of
C = d_I K + (gamma - (N/|Omega|)^q beta); because both are built from the
same A and B, the discrete sign relation between R0 - 1 and -lambda* is
structural, not approximate: R0 > 1 iff lambda* < 0, with R0 = 1 pinned at
lambda* = 0.

Both eigenvalues come from (inverse) power iteration with deterministic
starts; A and the shifted C are Stieltjes matrices, so their inverses are
entrywise nonnegative and a positive start stays positive all the way to the
principal eigenfunction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, NeumannOperator
from .linsolve import OperatorSolver


class SpectralError(RuntimeError):
    """Eigenvalue iteration failed to stagnate within its iteration budget."""


@dataclass(frozen=True)
class SpectralResult:
    R0: float
    lambda_star: float
    eigenfunction: np.ndarray     # positive maximizer of the R0 quotient, L2 norm 1
    iterations: int               # combined power / inverse iteration count


_RTOL = 1e-12
_MAX_ITER = 200_000


def principal_pair(grid: Grid, d_I: float, reaction) -> tuple[float, np.ndarray, int]:
    """Smallest eigenpair of d_I K + diag(reaction) by shifted inverse iteration.

    The shift sits strictly below min(reaction), hence below the whole
    spectrum (K is positive semidefinite), keeping the shifted matrix
    positive definite for the direct/CG solve.  Returns the eigenvalue, the
    positive eigenfunction normalized to unit Euclidean norm, and the
    iteration count.
    """
    reaction = grid.check_field(
        np.broadcast_to(np.asarray(reaction, dtype=float), grid.shape).copy(),
        "reaction")
    lo = float(np.min(reaction))
    hi = float(np.max(reaction))
    shift = lo - 0.01 * max(1.0, hi - lo, abs(lo))
    C = NeumannOperator(grid, d_I, reaction)
    solver = OperatorSolver(NeumannOperator(grid, d_I, reaction - shift), tol=1e-13)
    psi = grid.constant_field(1.0)
    psi /= np.linalg.norm(psi)
    lam_prev = None
    for k in range(1, _MAX_ITER + 1):
        psi = solver.solve(psi)
        psi /= np.linalg.norm(psi)
        lam = float(np.sum(psi * C.matvec(psi)))
        if lam_prev is not None and abs(lam - lam_prev) <= _RTOL * max(1.0, abs(lam)):
            return lam, np.abs(psi), k
        lam_prev = lam
    raise SpectralError(f"inverse iteration did not stagnate in {_MAX_ITER} steps")


def basic_reproduction_number(grid: Grid, beta, gamma, d_I: float,
                              mean_density: float, q: float) -> SpectralResult:
    """Compute R0 and lambda* for given rates and disease-free density.

    beta and gamma are positive fields on the grid, mean_density is
    N/|Omega|.  For spatially constant rates the constant test function is
    the exact maximizer and R0 collapses to (mean_density^q beta) / gamma
    independent of the mesh.
    """
    beta = grid.check_field(beta, "beta")
    gamma = grid.check_field(gamma, "gamma")
    if np.min(beta) <= 0 or np.min(gamma) <= 0:
        raise ValueError("beta and gamma must be strictly positive")
    if d_I <= 0:
        raise ValueError(f"d_I = {d_I} must be positive")
    if mean_density <= 0:
        raise ValueError(f"mean density {mean_density} must be positive")

    b = mean_density ** q * beta
    A = NeumannOperator(grid, d_I, gamma)
    solver = OperatorSolver(A, tol=1e-13)

    phi = grid.constant_field(1.0)
    phi /= np.sqrt(grid.integrate(phi * phi))
    rho = rho_prev = None
    for k_pow in range(1, _MAX_ITER + 1):
        psi = solver.solve(b * phi)
        psi /= np.sqrt(grid.integrate(psi * psi))
        rho = float(np.sum(b * psi * psi) / np.sum(psi * A.matvec(psi)))
        phi = psi
        if rho_prev is not None and abs(rho - rho_prev) <= _RTOL * max(abs(rho), 1e-300):
            break
        rho_prev = rho
    else:
        raise SpectralError(f"R0 power iteration did not stagnate in {_MAX_ITER} steps")

    lam, _, k_inv = principal_pair(grid, d_I, gamma - b)
    return SpectralResult(R0=rho, lambda_star=lam, eigenfunction=np.abs(phi),
                          iterations=k_pow + k_inv)
