"""Steady states of the SIS system at a prescribed total mass.

Space-independent steady states come from scalar root finding: with
homogeneous rates and gamma = r beta the endemic balance for p < 1 reads

    r (N/|Omega| - S*)^(1-p) = (S*)^q,

whose left side falls from r (N/|Omega|)^(1-p) to 0 while the right side
climbs from 0, so the root is unique and bisection is enough.  For p = 1 the
endemic state is explicit, S^ = r^(1/q), and exists precisely when the mean
density exceeds it (the algebraic face of the R0 threshold).

Spatially varying steady states (equal diffusivities, so S + I relaxes to
the constant tau0 = N/|Omega| and the I equation closes) are produced by a
damped monotone fixed-point iteration

    u_{k+1} = (d_I K + c)^(-1) ( c u_k + g(u_k) ),
    g(u) = beta (tau0 - u)^q u^p - gamma u,

run simultaneously from an upper solution (the constant tau0) and a lower
solution (a small constant for p < 1, a scaled principal eigenfunction for
p = 1).  With c dominating -dg/du on the bracket, each sequence is monotone
and they pinch the steady state from both sides; a persistent gap between
the two limits would certify non-uniqueness and is raised as an alarm rather
than averaged away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import DomainError
from .grid import Grid, NeumannOperator
from .linsolve import OperatorSolver
from .spectral import principal_pair


class NonUniquenessAlarm(RuntimeError):
    """Upper and lower monotone limits refused to meet within tolerance."""


@dataclass(frozen=True)
class Equilibrium:
    kind: str                     # "disease-free" | "constant-endemic" | "heterogeneous-endemic"
    S: np.ndarray
    I: np.ndarray
    residual: float
    S_value: float | None = None  # set for spatially constant kinds
    I_value: float | None = None


def dfe(grid: Grid, mean_density: float) -> Equilibrium:
    """Disease-free state: S spread evenly at N/|Omega|, I identically zero."""
    if mean_density <= 0:
        raise DomainError(f"mean density {mean_density} must be positive")
    return Equilibrium(kind="disease-free",
                       S=grid.constant_field(mean_density),
                       I=grid.constant_field(0.0),
                       residual=0.0,
                       S_value=float(mean_density), I_value=0.0)


def constant_ee_sublinear(mean_density: float, r: float, p: float, q: float,
                          grid: Grid | None = None) -> Equilibrium:
    """Constant endemic state for p < 1, homogeneous rates with gamma = r beta.

    Solves r (m - S)^(1-p) = S^q on (0, m) by bisection to a bracket width of
    1e-14 m, then polishes with a few guarded Newton steps.  The root always
    exists for p < 1: sublinear incidence cannot sustain a disease-free limit
    at positive mass, so the endemic state needs no threshold condition.
    """
    if not (0 < p < 1):
        raise DomainError(f"constant endemic state with p = {p}; this branch needs p < 1")
    if mean_density <= 0 or r <= 0 or q <= 0:
        raise DomainError("mean density, r, and q must be positive")
    m = float(mean_density)

    def f(S):
        return r * (m - S) ** (1.0 - p) - S ** q

    lo, hi = 0.0, m
    while hi - lo > 1e-14 * m:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    S_star = 0.5 * (lo + hi)
    for _ in range(3):
        df = -r * (1.0 - p) * (m - S_star) ** (-p) - q * S_star ** (q - 1.0)
        step = f(S_star) / df
        if not np.isfinite(step):
            break
        S_star = min(max(S_star - step, lo), hi)
    I_star = m - S_star
    residual = abs(f(S_star)) / (r * m ** (1.0 - p) + m ** q)
    eq_grid = grid
    S_field = (eq_grid.constant_field(S_star) if eq_grid is not None
               else np.array([S_star]))
    I_field = (eq_grid.constant_field(I_star) if eq_grid is not None
               else np.array([I_star]))
    return Equilibrium(kind="constant-endemic", S=S_field, I=I_field,
                       residual=residual, S_value=float(S_star),
                       I_value=float(I_star))


def constant_ee_linear(mean_density: float, r: float, q: float,
                       grid: Grid | None = None) -> Equilibrium | None:
    """Constant endemic state for p = 1, or None below the threshold.

    S^ = r^(1/q) and I^ = N/|Omega| - S^; the state exists exactly when the
    mean density exceeds r^(1/q), which for homogeneous rates is the same
    statement as R0 > 1.
    """
    if mean_density <= 0 or r <= 0 or q <= 0:
        raise DomainError("mean density, r, and q must be positive")
    S_hat = r ** (1.0 / q)
    if mean_density <= S_hat:
        return None
    I_hat = mean_density - S_hat
    residual = abs(S_hat ** q - r) / r
    S_field = grid.constant_field(S_hat) if grid is not None else np.array([S_hat])
    I_field = grid.constant_field(I_hat) if grid is not None else np.array([I_hat])
    return Equilibrium(kind="constant-endemic", S=S_field, I=I_field,
                       residual=residual, S_value=float(S_hat),
                       I_value=float(I_hat))


@dataclass(frozen=True)
class HeterogeneousEE:
    equilibrium: Equilibrium
    iterations: int
    final_gap: float              # max-norm distance between the two limits
    monotone_violation: float     # worst ordering breach seen along the way
    damping: float                # the constant c of the fixed-point map
    lower_start: np.ndarray


def _lower_level_sublinear(grid: Grid, tau0: float, beta, gamma, p: float,
                           q: float) -> float:
    """Constant lower-solution level for p < 1.

    delta qualifies when (tau0 - delta)^q min(beta/gamma) > delta^(1-p); the
    left side falls and the right side climbs, so bisection on their
    difference finds the supremum of qualifying levels, and half of it is a
    comfortably strict lower solution.
    """
    ratio = float(np.min(beta / gamma))

    def G(delta):
        return (tau0 - delta) ** q * ratio - delta ** (1.0 - p)

    lo, hi = 0.0, tau0
    while hi - lo > 1e-14 * tau0:
        mid = 0.5 * (lo + hi)
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * lo


def heterogeneous_ee(grid: Grid, tau0: float, beta, gamma, d_I: float,
                     p: float, q: float, tol: float = 1e-10) -> HeterogeneousEE:
    """Positive steady state of the reduced infection equation

        d_I Lap u + beta (tau0 - u)^q u^p - gamma u = 0,   0 < u < tau0,

    by monotone iteration from both sides.  For p = 1 the state only exists
    below the stability threshold; the principal eigenvalue of
    d_I K + (gamma - beta tau0^q) is checked first and a nonnegative value
    refuses with a domain error instead of fabricating a spurious root.
    """
    beta = grid.check_field(beta, "beta")
    gamma = grid.check_field(gamma, "gamma")
    if np.min(beta) <= 0 or np.min(gamma) <= 0:
        raise DomainError("beta and gamma must be strictly positive")
    if tau0 <= 0 or d_I <= 0:
        raise DomainError("tau0 and d_I must be positive")
    if not (0 < p <= 1):
        raise DomainError(f"monotone construction covers 0 < p <= 1, got p = {p}")
    if tol <= 0:
        raise DomainError("tol must be positive")

    tau0 = float(tau0)

    def g(u):
        return beta * np.maximum(tau0 - u, 0.0) ** q * np.power(u, p) - gamma * u

    # starting bracket
    upper = grid.constant_field(tau0)
    if p < 1:
        delta = _lower_level_sublinear(grid, tau0, beta, gamma, p, q)
        lower = grid.constant_field(delta)
    else:
        lam, phi, _ = principal_pair(grid, d_I, gamma - beta * tau0 ** q)
        if lam >= 0:
            raise DomainError(
                f"no positive steady state: principal eigenvalue {lam:.3g} >= 0 "
                "(infection dies out at this mass)")
        phi = phi / float(np.max(phi))
        eps = 0.1 * tau0
        for _ in range(80):
            cand = eps * phi
            slack = d_I * grid.laplacian(cand) + g(cand)
            if np.min(slack) >= -1e-14 * tau0:
                break
            eps *= 0.5
        else:
            raise DomainError("could not scale the eigenfunction into a lower solution")
        lower = eps * phi
    lower_start = lower.copy()

    # damping constant: dominate -dg/du on the value range of the iterates
    u_lo = float(np.min(lower))
    samples = np.linspace(u_lo, tau0, 1024)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.maximum(tau0 - samples, 0.0)
        dg = (beta.reshape(-1, 1)
              * (p * np.power(samples, p - 1.0) * np.power(w, q)
                 - q * np.power(w, q - 1.0) * np.power(samples, p))
              - gamma.reshape(-1, 1))
    dg = dg[np.isfinite(dg)]
    c = 1.1 * max(float(np.max(-dg)), 0.0) + 1e-12

    solver = OperatorSolver(NeumannOperator(grid, d_I, c), tol=1e-13)
    violation = 0.0
    gap = float(np.max(upper - lower))
    stagnation = 1e-15 * max(1.0, tau0)
    for k in range(1, 200_001):
        upper_next = solver.solve(c * upper + g(upper))
        lower_next = solver.solve(c * lower + g(lower))
        violation = max(violation,
                        float(np.max(upper_next - upper)),
                        float(np.max(lower - lower_next)),
                        float(np.max(lower_next - upper_next)))
        step = max(float(np.max(np.abs(upper_next - upper))),
                   float(np.max(np.abs(lower_next - lower))))
        upper, lower = upper_next, lower_next
        gap = float(np.max(np.abs(upper - lower)))
        if gap <= tol and step <= 0.1 * tol:
            break
        if step <= stagnation:
            if gap > tol:
                raise NonUniquenessAlarm(
                    f"monotone limits stagnated {gap:.3g} apart (tol {tol:g}); "
                    "the steady state may not be unique")
            break
    else:
        raise NonUniquenessAlarm(
            f"monotone iteration did not close the bracket in 200000 sweeps "
            f"(gap {gap:.3g}, tol {tol:g})")

    u = 0.5 * (upper + lower)
    residual = float(np.max(np.abs(d_I * grid.laplacian(u) + g(u))))
    eq = Equilibrium(kind="heterogeneous-endemic", S=tau0 - u, I=u,
                     residual=residual)
    return HeterogeneousEE(equilibrium=eq, iterations=k, final_gap=gap,
                           monotone_violation=violation, damping=c,
                           lower_start=lower_start)
