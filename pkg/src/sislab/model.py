"""Model data for the cross-diffusive SIS system with power-law incidence.

The continuum problem on a rectangle Omega with reflecting boundaries is

    S_t = d_S Lap S + chi div(S grad I) - beta(x) S^q I^p + gamma(x) I,
    I_t = d_I Lap I + beta(x) S^q I^p - (gamma(x) + mu) I,

with exponents p, q > 0, disease-induced mortality mu >= 0, and a signed
cross-diffusion coefficient chi (chi > 0 drives S away from infected zones).
Adding the two equations kills the incidence and recovery terms, so the total
population satisfies d/dt integral(S + I) = -mu integral(I); for mu = 0 the
total mass N = integral(S0 + I0) is conserved and every equilibrium statement
is relative to that invariant.

This module holds the parameter record, coefficient materialization onto a
grid, the incidence nonlinearity, and admissibility checks on initial data.
The power-law incidence is only locally Lipschitz when an exponent is below
one, which is why admissibility then demands a strictly positive infimum of
the corresponding component: uniqueness of the evolution starts from there,
and the positivity floor in the time integrator preserves it discretely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import parse_expression
from .grid import Grid


class ParameterError(ValueError):
    """A scalar model parameter is out of its admissible range."""


class CoefficientError(ValueError):
    """A materialized coefficient is unusable (wrong size, not positive...)."""


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the system; spatial coefficients live elsewhere.

    d_S, d_I are the diffusivities of the susceptible and infected classes,
    chi the cross-diffusion strength, mu the disease-induced death rate, and
    p, q the incidence exponents on I and S respectively.
    """

    d_S: float
    d_I: float
    chi: float = 0.0
    mu: float = 0.0
    p: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        checks = [
            ("d_S", self.d_S, self.d_S > 0),
            ("d_I", self.d_I, self.d_I > 0),
            ("chi", self.chi, np.isfinite(self.chi)),
            ("mu", self.mu, self.mu >= 0),
            ("p", self.p, self.p > 0),
            ("q", self.q, self.q > 0),
        ]
        for name, value, ok in checks:
            if not (ok and np.isfinite(value)):
                raise ParameterError(f"parameter {name} = {value} is not admissible")


@dataclass(frozen=True)
class CoefficientSpec:
    """How to produce a spatial coefficient: a constant, an expression in the
    cell-center coordinates, or an explicit table of cell values."""

    kind: str                      # "constant" | "expression" | "tabulated"
    value: float | None = None
    expr: str | None = None
    values: tuple[float, ...] | None = None

    @classmethod
    def constant(cls, value: float) -> "CoefficientSpec":
        return cls(kind="constant", value=float(value))

    @classmethod
    def expression(cls, expr: str) -> "CoefficientSpec":
        return cls(kind="expression", expr=expr)

    @classmethod
    def tabulated(cls, values) -> "CoefficientSpec":
        return cls(kind="tabulated", values=tuple(float(v) for v in np.ravel(values)))


def materialize_coefficient(spec: CoefficientSpec, grid: Grid,
                            positive: bool = True) -> np.ndarray:
    """Evaluate a coefficient spec to a field on the grid.

    Rate coefficients (beta, gamma) must be strictly positive and finite in
    every cell; violations are reported with the offending cell index.  Pass
    positive=False for data that is merely required finite (initial fields
    have their own admissibility checks).
    """
    if spec.kind == "constant":
        if spec.value is None:
            raise CoefficientError("constant coefficient needs a value")
        out = grid.constant_field(spec.value)
    elif spec.kind == "expression":
        if not spec.expr:
            raise CoefficientError("expression coefficient needs an expr string")
        names = ("x",) if grid.dim == 1 else ("x", "y")
        out = parse_expression(spec.expr, names)(grid.coordinate_fields())
        out = np.broadcast_to(out, grid.shape).astype(float)
    elif spec.kind == "tabulated":
        if spec.values is None:
            raise CoefficientError("tabulated coefficient needs values")
        vals = np.asarray(spec.values, dtype=float)
        if vals.size != grid.n_cells:
            raise CoefficientError(
                f"tabulated coefficient has {vals.size} entries, "
                f"grid has {grid.n_cells} cells")
        out = vals.reshape(grid.shape)
    else:
        raise CoefficientError(f"unknown coefficient kind '{spec.kind}'")

    bad = ~np.isfinite(out) if not positive else ~(np.isfinite(out) & (out > 0))
    if np.any(bad):
        idx = np.unravel_index(int(np.argmax(bad)), grid.shape)
        cell = idx[0] if grid.dim == 1 else tuple(int(i) for i in idx)
        kindmsg = "finite" if not positive else "positive and finite"
        raise CoefficientError(
            f"coefficient must be {kindmsg}; value {out[idx]} at cell {cell}")
    return out.copy()


class FloorPolicyError(RuntimeError):
    """A sublinear power was evaluated at zero, meaning the positivity floor
    upstream has been breached; this is an internal consistency failure, not
    a user error."""


def incidence(S, I, beta, p: float, q: float):
    """Power-law incidence beta * S^q * I^p, elementwise.

    Zero base with positive exponent evaluates to zero (the continuous
    extension), so the term vanishes on disease-free cells.  For exponents
    below one the derivative blows up at zero, and callers are expected to
    keep the corresponding component strictly positive; hitting an exact zero
    there raises FloorPolicyError rather than returning an infinite slope
    state silently.
    """
    S = np.asarray(S, dtype=float)
    I = np.asarray(I, dtype=float)
    if np.any(S < 0) or np.any(I < 0):
        raise ValueError("incidence requires S >= 0 and I >= 0")
    if q < 1 and np.any(S == 0):
        raise FloorPolicyError("S has a zero cell while q < 1")
    if p < 1 and np.any(I == 0):
        raise FloorPolicyError("I has a zero cell while p < 1")
    return beta * np.power(S, q) * np.power(I, p)


def validate_initial_data(S0, I0, p: float, q: float) -> list[str]:
    """Admissibility of initial data; returns a list of violation messages.

    An empty list means admissible: both components nonnegative and finite,
    the infection not identically zero, and strict positivity of whichever
    component enters the incidence with a sublinear power (S for q < 1, I for
    p < 1).  A shape mismatch between the two arrays is a structural error
    and raises instead of being reported as a violation.
    """
    S0 = np.asarray(S0, dtype=float)
    I0 = np.asarray(I0, dtype=float)
    if S0.shape != I0.shape:
        from .grid import FieldShapeError
        raise FieldShapeError(f"S0 shape {S0.shape} != I0 shape {I0.shape}")
    violations = []
    if not np.all(np.isfinite(S0)):
        violations.append("S0 must be finite everywhere")
    if not np.all(np.isfinite(I0)):
        violations.append("I0 must be finite everywhere")
    if violations:
        return violations
    if np.any(S0 < 0):
        violations.append("S0 must be nonnegative")
    if np.any(I0 < 0):
        violations.append("I0 must be nonnegative")
    if np.all(I0 <= 0) and not np.any(I0 < 0):
        violations.append("I0 must not vanish identically")
    if q < 1 and np.min(S0) <= 0:
        violations.append("inf S0 must be positive when q < 1")
    if p < 1 and np.min(I0) <= 0:
        violations.append("inf I0 must be positive when p < 1")
    return violations


@dataclass(frozen=True)
class ConservedTotals:
    """Initial total mass and domain size, the invariants every long-time
    statement is phrased against."""

    N: float
    omega_measure: float

    def __post_init__(self):
        if not (np.isfinite(self.N) and self.N > 0):
            raise ParameterError(f"total mass N = {self.N} must be positive")
        if not (np.isfinite(self.omega_measure) and self.omega_measure > 0):
            raise ParameterError(f"|Omega| = {self.omega_measure} must be positive")

    @property
    def mean_density(self) -> float:
        """N / |Omega|, the spatial average the system redistributes."""
        return self.N / self.omega_measure

    @classmethod
    def from_fields(cls, grid: Grid, S0, I0) -> "ConservedTotals":
        return cls(N=grid.integrate(S0) + grid.integrate(I0),
                   omega_measure=grid.omega_measure)
