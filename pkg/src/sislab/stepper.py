"""IMEX time stepping for the cross-diffusive SIS system.

Each step treats the two Laplacians implicitly (backward Euler by default,
Crank-Nicolson opt-in) and everything else explicitly:

    (Id + dt d_S K) S' = S + dt [ chi div(S grad I) - f(S,I) + gamma I ],
    (Id + dt d_I K) I' = I + dt [ f(S,I) - (gamma + mu) I ],

with K the Neumann stiffness and f the power-law incidence.  The explicit
reaction splits as R_S + R_I = -mu I pointwise, and the implicit solves
preserve cell sums exactly (K has zero column sums), so the discrete masses
obey the same balance law as the continuum system up to solver residual:
a rectangle rule in time for mu * integral(I).

Negative undershoots produced by the explicit terms are clamped to a small
positivity floor and the injected mass is logged; the floor also keeps S and
I strictly positive, which the sublinear incidence powers require.  A step
that produces non-finite values, triggers a linear-solver failure, or grows
past a fixed large multiple of the initial amplitude is retried with dt
halved; more than max_dt_shrink consecutive halvings abort the run as a
suspected blow-up (large chi can genuinely destroy boundedness, and the
integrator must report that rather than march on garbage).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import Trajectory, TrajectoryRecord
from .grid import Grid, NeumannOperator
from .linsolve import LinearSolveError, OperatorSolver
from .model import ModelParams, incidence

SCHEMES = ("backward-euler", "crank-nicolson")


class StepperConfigError(ValueError):
    """Bad time-integrator configuration."""


class BlowupAbort(RuntimeError):
    """Raised when repeated dt halvings still fail; carries the failure time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "backward-euler"
    positivity_floor: float = 1e-13
    linear_tol: float = 1e-10
    max_dt_shrink: int = 20

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise StepperConfigError(f"dt = {self.dt} must be positive")
        if self.scheme not in SCHEMES:
            raise StepperConfigError(
                f"scheme '{self.scheme}' unknown, expected one of {SCHEMES}")
        if not (0 < self.positivity_floor <= 1e-6):
            raise StepperConfigError(
                f"positivity_floor = {self.positivity_floor} out of (0, 1e-6]")
        if not (0 < self.linear_tol <= 1e-4):
            raise StepperConfigError(
                f"linear_tol = {self.linear_tol} out of (0, 1e-4]")
        if self.max_dt_shrink < 0:
            raise StepperConfigError("max_dt_shrink must be >= 0")


@dataclass(frozen=True)
class State:
    """Fields at a moment in time (arrays are not copied; treat as frozen)."""

    t: float
    S: np.ndarray
    I: np.ndarray


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    clamp_mass: float          # mass injected by the positivity floor
    shrinks: int               # halvings spent inside this step


_REGROW_AFTER = 50             # successful steps before dt is doubled back


class Stepper:
    """Holds coefficients and cached implicit-diffusion factorizations.

    The solver cache is keyed by the effective implicit dt, so the halving
    ladder and event-aligned partial steps reuse factorizations whenever the
    same step size recurs.
    """

    def __init__(self, grid: Grid, params: ModelParams, beta, gamma,
                 cfg: StepperConfig):
        self.grid = grid
        self.params = params
        self.beta = grid.check_field(beta, "beta")
        self.gamma = grid.check_field(gamma, "gamma")
        self.cfg = cfg
        self.current_dt = cfg.dt
        self._solvers: dict[tuple[str, float], OperatorSolver | None] = {}
        self._blowup_limit: float | None = None
        self._streak = 0

    # -- implicit solves --------------------------------------------------

    def _solver(self, component: str, dt_eff: float) -> OperatorSolver | None:
        key = (component, dt_eff)
        if key not in self._solvers:
            d = self.params.d_S if component == "S" else self.params.d_I
            if dt_eff * d == 0.0:
                self._solvers[key] = None
            else:
                op = NeumannOperator(self.grid, dt_eff * d, 1.0)
                self._solvers[key] = OperatorSolver(op, tol=self.cfg.linear_tol)
        return self._solvers[key]

    def _implicit(self, component: str, dt_eff: float, rhs: np.ndarray) -> np.ndarray:
        solver = self._solver(component, dt_eff)
        return rhs if solver is None else solver.solve(rhs)

    # -- single attempt ---------------------------------------------------

    def reaction(self, S: np.ndarray, I: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Explicit right-hand sides (cross-diffusion, incidence, recovery)."""
        p = self.params
        inc = incidence(S, I, self.beta, p.p, p.q)
        R_S = -inc + self.gamma * I
        if p.chi != 0.0:
            R_S = R_S + p.chi * self.grid.cross_diffusion_div(S, I)
        R_I = inc - (self.gamma + p.mu) * I
        return R_S, R_I

    def _attempt(self, state: State, dt: float):
        p = self.params
        R_S, R_I = self.reaction(state.S, state.I)
        if self.cfg.scheme == "backward-euler":
            S_new = self._implicit("S", dt, state.S + dt * R_S)
            I_new = self._implicit("I", dt, state.I + dt * R_I)
        else:
            half = 0.5 * dt
            S_new = self._implicit(
                "S", half, state.S + half * p.d_S * self.grid.laplacian(state.S) + dt * R_S)
            I_new = self._implicit(
                "I", half, state.I + half * p.d_I * self.grid.laplacian(state.I) + dt * R_I)

        if not (np.all(np.isfinite(S_new)) and np.all(np.isfinite(I_new))):
            return None
        amp = max(float(np.max(np.abs(S_new))), float(np.max(np.abs(I_new))))
        if self._blowup_limit is not None and amp > self._blowup_limit:
            return None

        floor = self.cfg.positivity_floor
        S_fl = np.maximum(S_new, floor)
        I_fl = np.maximum(I_new, floor)
        clamp = self.grid.integrate(S_fl - S_new) + self.grid.integrate(I_fl - I_new)
        return State(t=state.t + dt, S=S_fl, I=I_fl), clamp

    # -- public stepping --------------------------------------------------

    def step(self, state: State, dt_cap: float | None = None) -> tuple[State, StepReport]:
        """Advance one accepted step of size at most min(current dt, dt_cap).

        Failures halve dt (persistently, so the next step starts from the
        reduced value); after a long run of successes the step size doubles
        back toward the configured dt.
        """
        if self._blowup_limit is None:
            amp0 = max(float(np.max(np.abs(state.S))), float(np.max(np.abs(state.I))))
            self._blowup_limit = 1e8 * (1.0 + amp0)
        dt = self.current_dt if dt_cap is None else min(self.current_dt, dt_cap)
        if dt <= 0:
            raise ValueError(f"step asked for nonpositive dt (cap {dt_cap})")
        shrinks = 0
        while True:
            try:
                result = self._attempt(state, dt)
            except LinearSolveError:
                result = None
            if result is not None:
                break
            shrinks += 1
            if shrinks > self.cfg.max_dt_shrink:
                raise BlowupAbort(
                    f"step failed after {shrinks - 1} dt halvings at t = {state.t:.6g} "
                    f"(dt reached {dt:.3g}); suspected blow-up or unstable step size",
                    t=state.t)
            dt *= 0.5
            self.current_dt = min(self.current_dt, dt)
            self._streak = 0
        if shrinks == 0:
            self._streak += 1
            if self._streak >= _REGROW_AFTER and self.current_dt < self.cfg.dt:
                self.current_dt = min(self.cfg.dt, 2.0 * self.current_dt)
                self._streak = 0
        else:
            self._streak = 0
        new_state, clamp = result
        return new_state, StepReport(dt_used=dt, clamp_mass=clamp, shrinks=shrinks)


def solve_implicit_diffusion(grid: Grid, rhs: np.ndarray, d: float, dt: float,
                             tol: float = 1e-10) -> np.ndarray:
    """Solve (Id + dt d K) u = rhs, the backward Euler diffusion update.

    One-shot front end (no factorization reuse): direct tridiagonal solve in
    1d, Jacobi-preconditioned CG in 2d.
    """
    if dt * d == 0.0:
        return grid.check_field(rhs).copy()
    op = NeumannOperator(grid, dt * d, 1.0)
    return OperatorSolver(op, tol=tol).solve(grid.check_field(rhs))


@dataclass(frozen=True)
class RunConfig:
    """Orchestration of a time loop around the stepper."""

    t_end: float
    record_interval: float | None = None      # None records every step
    snapshot_times: tuple[float, ...] = ()
    convergence_window: int = 5
    convergence_tol: float = 0.0              # 0 disables early stopping
    functionals: dict = field(default_factory=dict)   # name -> f(S, I) -> float

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise StepperConfigError(f"t_end = {self.t_end} must be >= 0")
        if self.record_interval is not None and self.record_interval <= 0:
            raise StepperConfigError("record_interval must be positive")
        if self.convergence_window < 1:
            raise StepperConfigError("convergence window must be >= 1")
        if self.convergence_tol < 0:
            raise StepperConfigError("convergence tol must be >= 0")


def _stability_warning(grid: Grid, params: ModelParams, I0: np.ndarray, dt: float):
    """Explicit cross-diffusion carries a parabolic step-size restriction."""
    if params.chi == 0.0:
        return
    h_min = min(grid.h)
    dt_safe = h_min ** 2 / (4.0 * (params.d_S + abs(params.chi) * float(np.max(I0))))
    if dt > dt_safe:
        warnings.warn(
            f"dt = {dt:g} exceeds the explicit cross-diffusion guideline "
            f"{dt_safe:g}; expect dt halvings or a blow-up abort",
            RuntimeWarning, stacklevel=3)


def run(grid: Grid, params: ModelParams, beta, gamma, initial: State,
        stepper_cfg: StepperConfig, run_cfg: RunConfig) -> Trajectory:
    """March the system to t_end, recording diagnostics along the way.

    Steps are capped so that record times, snapshot times, and t_end are hit
    exactly.  The running integral of integral(I) dt uses the trapezoid rule
    over accepted steps.  Functionals are evaluated at every accepted step
    (their monotonicity is part of what runs are for), while full records are
    kept at the record cadence plus the initial and final instants.
    """
    S0 = grid.check_field(initial.S, "S0")
    I0 = grid.check_field(initial.I, "I0")
    _stability_warning(grid, params, I0, stepper_cfg.dt)
    stepper = Stepper(grid, params, beta, gamma, stepper_cfg)
    traj = Trajectory(grid=grid, mu=params.mu)

    state = State(t=float(initial.t), S=S0.copy(), I=I0.copy())
    t_start = state.t
    t_end = float(run_cfg.t_end) + state.t
    snap_due = sorted(t for t in run_cfg.snapshot_times if state.t <= t <= t_end)
    interval = run_cfg.record_interval
    # record events at t_start + k * interval, computed as products so the
    # cadence does not drift through repeated float accumulation
    record_k = 1
    next_record = t_start + interval if interval is not None else None

    window: list[tuple[np.ndarray, np.ndarray]] = []

    def functional_values(s: State) -> dict[str, float]:
        return {name: float(f(s.S, s.I)) for name, f in run_cfg.functionals.items()}

    traj.record(state, functional_values(state))
    if snap_due and abs(snap_due[0] - state.t) == 0.0:
        traj.snapshot(state)
        snap_due.pop(0)
    window.append((state.S, state.I))

    eps = 1e-9
    while state.t < t_end * (1 - 1e-15) - eps * stepper_cfg.dt:
        events = [t_end]
        if next_record is not None:
            events.append(next_record)
        if snap_due:
            events.append(snap_due[0])
        cap = min(events) - state.t
        try:
            new_state, report = stepper.step(state, dt_cap=cap)
        except BlowupAbort as abort:
            traj.finish(state, stop_reason="aborted", message=str(abort))
            return traj
        # snap onto an event when the step landed within rounding of it;
        # explicit snapshot times take priority so they are hit bit-exactly
        candidates = ([snap_due[0]] if snap_due else []) \
            + ([next_record] if next_record is not None else []) + [t_end]
        for ev in candidates:
            if abs(new_state.t - ev) <= eps * max(1.0, stepper_cfg.dt):
                new_state = replace(new_state, t=ev)
                break
        traj.accumulate(state, new_state, report)
        vals = functional_values(new_state)
        traj.track_functionals(vals)

        due_record = (interval is None) or (new_state.t >= next_record - eps * interval)
        if snap_due and new_state.t >= snap_due[0] - eps * max(1.0, stepper_cfg.dt):
            traj.snapshot(new_state)
            snap_due.pop(0)
        if due_record or new_state.t >= t_end * (1 - 1e-15):
            traj.record(new_state, vals)
            if interval is not None:
                while next_record <= new_state.t + eps * interval:
                    record_k += 1
                    next_record = t_start + record_k * interval
            window.append((new_state.S, new_state.I))
            if len(window) > run_cfg.convergence_window + 1:
                window.pop(0)
            if run_cfg.convergence_tol > 0 and detect_convergence(
                    window, run_cfg.convergence_window, run_cfg.convergence_tol):
                state = new_state
                traj.finish(state, stop_reason="converged")
                return traj
        state = new_state

    traj.finish(state, stop_reason="t_end")
    return traj


def detect_convergence(states, window: int, tol: float) -> bool:
    """True when the last `window` states all sit within tol of the newest.

    The metric is max over the window of ||S - S_last||_inf + ||I - I_last||_inf,
    compared against tol * (1 + ||S_last||_inf + ||I_last||_inf), an absolute
    plus relative mix that behaves sensibly for fields decaying to zero.
    """
    if len(states) < window + 1:
        return False
    S_last, I_last = states[-1]
    scale = tol * (1.0 + float(np.max(np.abs(S_last))) + float(np.max(np.abs(I_last))))
    worst = 0.0
    for S, I in states[-(window + 1):-1]:
        diff = float(np.max(np.abs(S - S_last))) + float(np.max(np.abs(I - I_last)))
        worst = max(worst, diff)
    return worst <= scale
