"""Scenario execution: analyses, time loop, artifacts.

run_scenario ties the pieces together for one scenario: classify the
parameter regime, compute spectral quantities and target equilibria where
the theory provides them, march the PDE, and measure the run against the
prediction (mass balance, distance to the predicted limit, Lyapunov
monotonicity, decay rates).  Everything lands in an output directory as
timeseries.csv, optional snapshot tables, and summary.json; the summary
embeds the fully defaulted scenario so the artifact is self-describing.

sweep expands a template scenario along parameter axes (cartesian product,
axes in sorted path order) and runs each instance, optionally across
processes.  Rows are collected in expansion order no matter how workers are
scheduled, so results.csv is byte-stable for any worker count; a failing
instance becomes an error row and does not take the sweep down with it.
"""

from __future__ import annotations

import copy
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .classifier import (Outcome, Prediction, boundedness_certificate,
                         predict_long_time, proportional_rates)
from .diagnostics import (DomainError, decay_rate, lyapunov_V1, lyapunov_V3,
                          lyapunov_V4, mass_balance_residual, predict_S_star)
from .equilibria import (NonUniquenessAlarm, constant_ee_linear,
                         constant_ee_sublinear, dfe, heterogeneous_ee)
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .serialize import write_csv, write_json, write_snapshot, write_timeseries
from .spectral import SpectralResult, basic_reproduction_number
from .stepper import RunConfig, State, StepperConfig, run


def needs_spectral(sc: Scenario) -> bool:
    """The p = 1 threshold branches cannot be decided without R0."""
    if sc.params.mu > 0 or sc.params.chi != 0 or sc.params.p != 1:
        return False
    prop, _ = proportional_rates(sc.gamma, sc.beta)
    return prop or sc.params.d_S == sc.params.d_I


def compute_spectral(sc: Scenario) -> SpectralResult:
    return basic_reproduction_number(sc.grid, sc.beta, sc.gamma, sc.params.d_I,
                                     sc.totals.mean_density, sc.params.q)


def _target_equilibrium(sc: Scenario, prediction: Prediction):
    """Fields the run should approach, when the theory names them.

    Returns (S_target, I_target, info) with info a summary fragment, or
    (None, None, info) when no concrete target exists (unknown regimes, and
    the mortality cases where the S limit is emergent).
    """
    g = sc.grid
    m = sc.totals.mean_density
    if prediction.outcome is Outcome.EXTINCTION_BOTH:
        return g.constant_field(0.0), g.constant_field(0.0), {
            "kind": "extinct", "residual": 0.0}
    if prediction.outcome is Outcome.DISEASE_FREE:
        if sc.params.mu > 0:
            return None, g.constant_field(0.0), {"kind": "disease-free-emergent"}
        eq = dfe(g, m)
        return eq.S, eq.I, {"kind": eq.kind, "residual": eq.residual,
                            "S_value": eq.S_value, "I_value": eq.I_value}
    if prediction.outcome is Outcome.CONSTANT_ENDEMIC:
        prop, r = proportional_rates(sc.gamma, sc.beta)
        if sc.params.p < 1:
            eq = constant_ee_sublinear(m, r, sc.params.p, sc.params.q, grid=g)
        else:
            eq = constant_ee_linear(m, r, sc.params.q, grid=g)
            if eq is None:
                return None, None, {"kind": "constant-endemic",
                                    "error": "below threshold at this mass"}
        return eq.S, eq.I, {"kind": eq.kind, "residual": eq.residual,
                            "S_value": eq.S_value, "I_value": eq.I_value}
    if prediction.outcome is Outcome.HETEROGENEOUS_ENDEMIC:
        try:
            het = heterogeneous_ee(g, m, sc.beta, sc.gamma, sc.params.d_I,
                                   sc.params.p, sc.params.q)
        except (DomainError, NonUniquenessAlarm) as err:
            return None, None, {"kind": "heterogeneous-endemic", "error": str(err)}
        eq = het.equilibrium
        return eq.S, eq.I, {"kind": eq.kind, "residual": eq.residual,
                            "iterations": het.iterations,
                            "bracket_gap": het.final_gap,
                            "monotone_violation": het.monotone_violation}
    return None, None, None


def _lyapunov_functionals(sc: Scenario, prediction: Prediction):
    """Pick the functional the convergence theory dissipates in this regime.

    Returns (functionals dict, info fragment).  Regimes without a functional
    get an empty dict and a reason, not an error: asking for Lyapunov
    tracking in an unknown regime is a legitimate exploratory run.
    """
    g = sc.grid
    m = sc.totals.mean_density
    p, q = sc.params.p, sc.params.q
    prop, r = proportional_rates(sc.gamma, sc.beta)
    if sc.params.mu == 0 and sc.params.chi == 0 and prop and p < 1:
        eq = constant_ee_sublinear(m, r, p, q)
        f = {"V1": lambda S, I: lyapunov_V1(g, S, I, eq.S_value, eq.I_value, p, q)}
        return f, {"applicable": True, "name": "V1",
                   "S_star": eq.S_value, "I_star": eq.I_value}
    if sc.params.mu == 0 and sc.params.chi == 0 and prop and p == 1:
        if m <= r ** (1.0 / q):
            f = {"V3": lambda S, I: lyapunov_V3(g, S, I, m, r, q)}
            return f, {"applicable": True, "name": "V3", "r": r}
        eq = constant_ee_linear(m, r, q)
        f = {"V4": lambda S, I: lyapunov_V4(g, S, I, eq.S_value, eq.I_value,
                                            sc.params.d_S, sc.params.d_I)}
        return f, {"applicable": True, "name": "V4",
                   "S_hat": eq.S_value, "I_hat": eq.I_value}
    return {}, {"applicable": False,
                "reason": "no dissipated functional known for this regime"}


def run_scenario(sc: Scenario, out_dir: str | Path) -> dict:
    """Run one scenario and write its artifacts; returns the summary dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = sc.spec
    analyses = set(spec.analyses) or {"certificate", "prediction"}

    certificate = boundedness_certificate(sc.grid.dim, sc.params.p, sc.params.q)
    spectral = None
    if "r0" in analyses or needs_spectral(sc):
        spectral = compute_spectral(sc)
    prediction = predict_long_time(sc.params, sc.beta, sc.gamma,
                                   mean_density=sc.totals.mean_density,
                                   spectral=spectral)

    want_target = analyses & {"equilibria", "lyapunov", "prediction"}
    S_target = I_target = None
    target_info = None
    if want_target:
        S_target, I_target, target_info = _target_equilibrium(sc, prediction)

    functionals, lyap_info = ({}, None)
    if "lyapunov" in analyses:
        functionals, lyap_info = _lyapunov_functionals(sc, prediction)

    run_cfg = RunConfig(
        t_end=spec.t_end,
        record_interval=spec.output.record_interval,
        snapshot_times=tuple(spec.output.snapshot_times),
        convergence_window=spec.convergence.window,
        convergence_tol=spec.convergence.tol,
        functionals=functionals,
    )
    stepper_cfg = StepperConfig(**spec.stepper.model_dump())
    traj = run(sc.grid, sc.params, sc.beta, sc.gamma,
               State(t=0.0, S=sc.S0, I=sc.I0), stepper_cfg, run_cfg)

    # ---- measurements against the prediction -----------------------------
    final = traj.records[-1]
    mass_residual = mass_balance_residual(traj, sc.totals.N)
    S_star_pred = None
    if sc.params.mu > 0:
        S_star_pred = predict_S_star(traj, sc.totals.N)
        if S_target is None and prediction.outcome is Outcome.DISEASE_FREE:
            S_target = sc.grid.constant_field(S_star_pred)
    distance = None
    if S_target is not None and I_target is not None:
        distance = {
            "S": float(np.max(np.abs(traj.final_S - S_target))),
            "I": float(np.max(np.abs(traj.final_I - I_target))),
        }
    elif I_target is not None:
        distance = {"S": None,
                    "I": float(np.max(np.abs(traj.final_I - I_target)))}

    rates = None
    if "rates" in analyses:
        rates = {}
        for name in ("linf_I", "mass_I"):
            try:
                rates[name] = decay_rate(*traj.series(name))
            except DomainError as err:
                rates[name] = None
                rates[name + "_note"] = str(err)

    if lyap_info is not None and lyap_info.get("applicable"):
        name = lyap_info["name"]
        lyap_info.update({
            "initial": traj.functional_start.get(name),
            "final": traj.functional_last.get(name),
            "max_rise": traj.functional_max_rise.get(name, 0.0),
            "monotone": traj.functional_monotone(name),
        })

    # ---- artifacts --------------------------------------------------------
    functional_names = sorted(functionals)
    write_timeseries(out / "timeseries.csv", traj, functional_names)
    snapshots = []
    for k, (t, S, I) in enumerate(traj.snapshots):
        fname = f"snapshot_{k:03d}.csv"
        write_snapshot(out / fname, sc.grid, S, I)
        snapshots.append({"t": t, "file": fname})

    summary = {
        "id": spec.id,
        "version": __version__,
        "scenario": spec.model_dump(),
        "totals": {"N": sc.totals.N, "mean_density": sc.totals.mean_density},
        "certificate": {
            "dim": certificate.dim, "p": certificate.p, "q": certificate.q,
            "small_chi": certificate.small_chi,
            "any_chi_semigroup": certificate.any_chi_semigroup,
            "any_chi_energy": certificate.any_chi_energy,
            "verdict": certificate.verdict.value,
        },
        "prediction": {
            "outcome": prediction.outcome.value,
            "rate_claim": prediction.rate_claim,
            "mechanism": prediction.mechanism,
            "conditional_on_boundedness": prediction.conditional_on_boundedness,
            "S_limit": prediction.S_limit,
            "I_limit": prediction.I_limit,
            "S_cap": prediction.S_cap,
            "R0": prediction.R0,
        },
        "spectral": None if spectral is None else {
            "R0": spectral.R0,
            "lambda_star": spectral.lambda_star,
            "iterations": spectral.iterations,
        },
        "equilibrium_target": target_info,
        "run": {
            "stop_reason": traj.stop_reason,
            "abort_message": traj.abort_message,
            "final_t": traj.final_t,
            "steps": traj.steps_taken,
            "dt_shrinks": traj.total_shrinks,
            "clamp_total": traj.clamp_total,
            "final": {"mass_S": final.mass_S, "mass_I": final.mass_I,
                      "linf_S": final.linf_S, "linf_I": final.linf_I},
            "mass_balance_residual": mass_residual,
            "S_star_predicted": S_star_pred,
            "S_final_mean": final.mass_S / sc.grid.omega_measure,
            "distance_to_target": distance,
            "lyapunov": lyap_info,
            "rates": rates,
        },
        "artifacts": {"timeseries": "timeseries.csv", "snapshots": snapshots},
    }
    write_json(out / "summary.json", summary)
    return summary


def run_scenario_file(path: str | Path, out_root: str | Path) -> dict:
    sc = load_scenario(path)
    return run_scenario(sc, Path(out_root) / sc.spec.id)


# ---- sweeps ---------------------------------------------------------------


class AxesModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    axes: dict[str, list] = Field(min_length=1)


class SweepError(ValueError):
    pass


def _set_path(data: dict, path: str, value):
    keys = path.split(".")
    node = data
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise SweepError(f"axis path '{path}' does not exist in the template")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise SweepError(f"axis path '{path}' does not exist in the template")
    node[keys[-1]] = value


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def expand_sweep(template: dict, axes: dict[str, list]) -> list[dict]:
    """Cartesian product of axis values over a template scenario dict.

    Axes apply in sorted path order and the rightmost axis varies fastest,
    so the expansion order is a pure function of the inputs.  Every instance
    gets a distinguishing id suffix built from the axis values.
    """
    if not axes:
        raise SweepError("sweep needs at least one axis")
    paths = sorted(axes)
    for path, values in axes.items():
        if not values:
            raise SweepError(f"axis '{path}' has no values")
    combos = [[]]
    for path in paths:
        combos = [c + [(path, v)] for c in combos for v in axes[path]]
    instances = []
    base_id = template.get("id", "sweep")
    for combo in combos:
        inst = copy.deepcopy(template)
        suffix = "__".join(f"{p.replace('.', '-')}={_format_value(v)}"
                           for p, v in combo)
        for path, value in combo:
            _set_path(inst, path, value)
        inst["id"] = f"{base_id}__{suffix}"
        instances.append(inst)
    return instances


_ROW_FIELDS = ["stop_reason", "final_t", "mass_balance_residual", "linf_S",
               "linf_I", "clamp_total", "verdict", "outcome", "R0",
               "distance_S", "distance_I"]


def _summary_row(index: int, inst: dict, combo_paths: list[str], summary: dict,
                 error: str | None) -> list:
    row = [index, inst["id"]]
    for path in combo_paths:
        node = inst
        for k in path.split("."):
            node = node[k]
        row.append(node)
    if error is not None:
        row += ["error"] + [None] * (len(_ROW_FIELDS) - 1) + [error]
        return row
    runpart = summary["run"]
    dist = runpart.get("distance_to_target") or {}
    spectral = summary.get("spectral") or {}
    row += [
        runpart["stop_reason"], runpart["final_t"],
        runpart["mass_balance_residual"], runpart["final"]["linf_S"],
        runpart["final"]["linf_I"], runpart["clamp_total"],
        summary["certificate"]["verdict"], summary["prediction"]["outcome"],
        spectral.get("R0"), dist.get("S"), dist.get("I"), None,
    ]
    return row


def _run_instance(payload: tuple[dict, str]) -> tuple[dict | None, str | None]:
    inst, out_dir = payload
    try:
        sc = parse_scenario(inst)
        summary = run_scenario(sc, out_dir)
        return summary, None
    except Exception as err:   # the sweep must survive a bad instance
        return None, f"{type(err).__name__}: {err}"


def sweep(template: dict, axes: dict[str, list], out_root: str | Path,
          jobs: int = 1) -> list[list]:
    """Run the expansion of template x axes; write results.csv under out_root.

    Each instance lands in out_root/runs/<instance id>/.  With jobs > 1 the
    instances run in a process pool; rows are still assembled in expansion
    order, so the artifact bytes do not depend on the worker count.
    """
    instances = expand_sweep(template, axes)
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    paths = sorted(axes)
    payloads = [(inst, str(out_root / "runs" / inst["id"])) for inst in instances]

    if jobs <= 1:
        results = [_run_instance(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_instance, payloads))

    header = ["index", "id"] + [p.replace(".", "-") for p in paths] \
        + _ROW_FIELDS + ["error"]
    rows = [_summary_row(i, inst, paths, summary, error)
            for i, (inst, (summary, error)) in enumerate(zip(instances, results))]
    write_csv(out_root / "results.csv", header, rows)
    return rows


def load_axes(path: str | Path) -> dict[str, list]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise SweepError(f"cannot read axes file {path}: {err}") from err
    try:
        model = AxesModel.model_validate(data)
    except ValidationError as err:
        raise SweepError(f"axes file {path} failed validation: {err}") from err
    return model.axes
