"""Trajectory bookkeeping and the analysis quantities read off from runs.

A Trajectory collects per-record scalar diagnostics (masses, sup norms,
gradient energies, clamp totals, Lyapunov values), sparse field snapshots,
and the running time integral of integral(I), which is what the mass balance

    integral(S + I)(t) + mu * integral_0^t integral(I) = N

turns into after discretization.  The Lyapunov functionals below are the
exact integrands whose dissipation the long-time theory rests on: V1 (with
its q = 1 logarithmic variant) certifies convergence to the constant endemic
equilibrium in the sublinear regime gamma = r beta, and the quadratic pair
V3/V4 handles the linear-incidence threshold cases below and above R0 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid


class DomainError(ValueError):
    """A quantity was requested outside the parameter regime where it means
    anything (e.g. a mortality-based limit in a conservative run)."""


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    mass_S: float
    mass_I: float
    linf_S: float
    linf_I: float
    grad2_S: float
    grad2_I: float
    clamp_total: float          # cumulative floored-in mass up to this time
    cum_I: float                # trapezoid of integral(I) dt up to this time
    functionals: dict[str, float] = field(default_factory=dict)


@dataclass
class Trajectory:
    """Diagnostics of one run; filled incrementally by the time loop."""

    grid: Grid
    mu: float
    records: list[TrajectoryRecord] = field(default_factory=list)
    snapshots: list[tuple[float, np.ndarray, np.ndarray]] = field(default_factory=list)
    stop_reason: str = "t_end"
    abort_message: str | None = None
    final_t: float = 0.0
    final_S: np.ndarray | None = None
    final_I: np.ndarray | None = None
    clamp_total: float = 0.0
    cum_I: float = 0.0
    steps_taken: int = 0
    total_shrinks: int = 0
    functional_start: dict[str, float] = field(default_factory=dict)
    functional_last: dict[str, float] = field(default_factory=dict)
    functional_max_rise: dict[str, float] = field(default_factory=dict)

    # -- called by the time loop ------------------------------------------

    def record(self, state, functionals: dict[str, float]):
        g = self.grid
        self.records.append(TrajectoryRecord(
            t=state.t,
            mass_S=g.integrate(state.S),
            mass_I=g.integrate(state.I),
            linf_S=float(np.max(np.abs(state.S))),
            linf_I=float(np.max(np.abs(state.I))),
            grad2_S=g.grad_sq_integral(state.S),
            grad2_I=g.grad_sq_integral(state.I),
            clamp_total=self.clamp_total,
            cum_I=self.cum_I,
            functionals=dict(functionals),
        ))

    def snapshot(self, state):
        self.snapshots.append((state.t, state.S.copy(), state.I.copy()))

    def accumulate(self, old, new, report):
        g = self.grid
        dt = new.t - old.t
        self.cum_I += 0.5 * dt * (g.integrate(old.I) + g.integrate(new.I))
        self.clamp_total += report.clamp_mass
        self.steps_taken += 1
        self.total_shrinks += report.shrinks

    def track_functionals(self, values: dict[str, float]):
        for name, v in values.items():
            if name not in self.functional_start:
                self.functional_start[name] = v
            else:
                rise = v - self.functional_last[name]
                prev = self.functional_max_rise.get(name, 0.0)
                self.functional_max_rise[name] = max(prev, rise)
            self.functional_last[name] = v

    def finish(self, state, stop_reason: str, message: str | None = None):
        self.stop_reason = stop_reason
        self.abort_message = message
        self.final_t = state.t
        self.final_S = state.S.copy()
        self.final_I = state.I.copy()

    # -- read-side helpers --------------------------------------------------

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) over records; name is a record field or functional."""
        t = np.array([r.t for r in self.records])
        if self.records and name in self.records[0].functionals:
            v = np.array([r.functionals[name] for r in self.records])
        else:
            v = np.array([getattr(r, name) for r in self.records])
        return t, v

    def functional_monotone(self, name: str, slack_rel: float = 1e-8) -> bool:
        """Whether the tracked functional never rose by more than
        slack_rel * its initial value between consecutive accepted steps."""
        if name not in self.functional_start:
            raise KeyError(f"functional '{name}' was not tracked")
        allowance = slack_rel * abs(self.functional_start[name])
        return self.functional_max_rise.get(name, 0.0) <= allowance


def mass_balance_residual(traj: Trajectory, N: float) -> float:
    """Worst relative violation of the integrated balance law over records.

    Exact zero is not attainable: the time integral of integral(I) is
    accumulated by the trapezoid rule while the scheme realizes a rectangle
    rule, so the residual is O(dt) for mu > 0 and should halve with dt.
    """
    if not traj.records:
        raise DomainError("trajectory has no records")
    worst = 0.0
    for r in traj.records:
        worst = max(worst, abs(r.mass_S + r.mass_I + traj.mu * r.cum_I - N))
    return worst / N


def predict_S_star(traj: Trajectory, N: float) -> float:
    """Limit susceptible density (N - mu * integral of integral(I)) / |Omega|.

    Only meaningful for mu > 0 after the infection has essentially died out;
    with mu = 0 mass is conserved and there is no mortality-driven limit to
    predict, which is reported as a domain error.
    """
    if traj.mu <= 0:
        raise DomainError("S_star prediction requires mu > 0")
    return (N - traj.mu * traj.cum_I) / traj.grid.omega_measure


# -- Lyapunov functionals -------------------------------------------------


def _require_positive(name: str, f: np.ndarray):
    if np.min(f) <= 0:
        raise DomainError(f"{name} must be strictly positive for this functional")


def lyapunov_V1(grid: Grid, S, I, S_star: float, I_star: float,
                p: float, q: float) -> float:
    """Entropy-like distance to the constant endemic equilibrium, p < 1.

    Integrand (each bracket is convex in its argument and vanishes exactly at
    the equilibrium value):

        [ (S - S*) - S*^q / (1-q) * (S^(1-q) - S*^(1-q)) ]
      + [ (I - I*) - I*^(1-p) / p * (I^p - I*^p) ]

    with the q = 1 susceptible bracket replaced by its logarithmic limit
    S - S* - S* log(S / S*).
    """
    if not (0 < p < 1):
        raise DomainError(f"V1 is defined for 0 < p < 1, got p = {p}")
    if not (S_star > 0 and I_star > 0):
        raise DomainError("V1 needs a positive equilibrium")
    S = grid.check_field(S, "S")
    I = grid.check_field(I, "I")
    _require_positive("S", S)
    _require_positive("I", I)
    if q == 1.0:
        s_part = S - S_star - S_star * np.log(S / S_star)
    else:
        s_part = (S - S_star) - S_star ** q / (1.0 - q) * (
            np.power(S, 1.0 - q) - S_star ** (1.0 - q))
    i_part = (I - I_star) - I_star ** (1.0 - p) / p * (
        np.power(I, p) - I_star ** p)
    return grid.integrate(s_part + i_part)


def lyapunov_V3(grid: Grid, S, I, mean_density: float, r: float, q: float) -> float:
    """Subthreshold quadratic functional for linear incidence (p = 1).

    1/2 (S - N/|Omega|)^2 + (r^(1/q) - N/|Omega|) I, which is nonnegative and
    dissipated precisely when the mean density does not exceed r^(1/q), the
    R0 <= 1 side of the threshold.
    """
    m = float(mean_density)
    level = r ** (1.0 / q)
    if m > level:
        raise DomainError(
            f"V3 requires N/|Omega| <= r^(1/q) ({m:g} > {level:g})")
    S = grid.check_field(S, "S")
    I = grid.check_field(I, "I")
    return grid.integrate(0.5 * (S - m) ** 2 + (level - m) * I)


def lyapunov_V4(grid: Grid, S, I, S_hat: float, I_hat: float,
                d_S: float, d_I: float) -> float:
    """Superthreshold quadratic functional for linear incidence (p = 1).

    1/2 (S - S^ + I - I^)^2 + (d_S + d_I)^2 / (8 d_S d_I) * (S - S^)^2,
    centered at the constant endemic state (S^, I^); the diffusivity ratio
    weight is what makes the cross terms in its dissipation sign-definite.
    """
    if not (S_hat > 0 and I_hat > 0):
        raise DomainError("V4 needs the positive endemic state")
    S = grid.check_field(S, "S")
    I = grid.check_field(I, "I")
    w = (d_S + d_I) ** 2 / (8.0 * d_S * d_I)
    return grid.integrate(0.5 * (S - S_hat + I - I_hat) ** 2 + w * (S - S_hat) ** 2)


def decay_rate(times, values) -> float:
    """Exponential rate fitted to the tail of a positive series.

    Least-squares slope of log(values) against time over the last half of
    the points (at least 5); the returned rate is the negated slope, so a
    decaying series gives a positive number and a constant series gives 0.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise DomainError("times and values must be 1d arrays of equal length")
    k = (t.size + 1) // 2
    if k < 5:
        raise DomainError(f"tail window has {k} points, need at least 5")
    t_w, v_w = t[-k:], v[-k:]
    if np.min(v_w) <= 0:
        raise DomainError("values must be positive in the fit window")
    slope = np.polyfit(t_w, np.log(v_w), 1)[0]
    return float(-slope)
