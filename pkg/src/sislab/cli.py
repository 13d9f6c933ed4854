"""Command-line front end; a thin client over the library.

Verbs:

    sislab run SCENARIO.json [--out DIR]        simulate + artifacts
    sislab sweep TEMPLATE.json AXES.json [--out DIR] [--jobs N]
    sislab check SCENARIO.json                  validate + classify, no stepping
    sislab r0 SCENARIO.json                     spectral quantities only
    sislab serve [--host H] [--port P]          start the HTTP service

The output root is --out when given, else the SISLAB_OUT environment
variable, else ./sislab-out.  Exit codes: 0 on success, 2 for invalid
scenarios or configuration, 3 when a run aborts (suspected blow-up).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .classifier import boundedness_certificate, predict_long_time
from .diagnostics import DomainError
from .equilibria import NonUniquenessAlarm
from .expressions import ExpressionError
from .grid import FieldShapeError, GridError
from .linsolve import LinearSolveError
from .model import CoefficientError, ParameterError
from .runner import SweepError, compute_spectral, load_axes, run_scenario, sweep, needs_spectral
from .scenario import ScenarioError, load_scenario
from .serialize import json_dumps
from .spectral import SpectralError

_CONFIG_ERRORS = (ScenarioError, SweepError, GridError, ParameterError,
                  CoefficientError, ExpressionError, FieldShapeError,
                  DomainError)
_SOLVER_ERRORS = (LinearSolveError, SpectralError, NonUniquenessAlarm)


def _out_root(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("SISLAB_OUT")
    return Path(env) if env else Path("sislab-out")


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    out_dir = _out_root(args) / sc.spec.id
    summary = run_scenario(sc, out_dir)
    print(f"wrote {out_dir / 'summary.json'}")
    print(f"stop_reason: {summary['run']['stop_reason']}")
    if summary["run"]["stop_reason"] == "aborted":
        print(f"abort: {summary['run']['abort_message']}", file=sys.stderr)
        return 3
    return 0


def _cmd_sweep(args) -> int:
    import json
    try:
        template = json.loads(Path(args.template).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise SweepError(f"cannot read template {args.template}: {err}") from err
    axes = load_axes(args.axes)
    out_root = _out_root(args) / f"{template.get('id', 'sweep')}-sweep"
    rows = sweep(template, axes, out_root, jobs=args.jobs)
    failures = sum(1 for r in rows if r[-1] is not None)
    print(f"wrote {out_root / 'results.csv'} ({len(rows)} runs, {failures} failed)")
    return 0 if failures == 0 else 3


def _cmd_check(args) -> int:
    sc = load_scenario(args.scenario)   # raises ScenarioError when inadmissible
    spectral = compute_spectral(sc) if needs_spectral(sc) else None
    cert = boundedness_certificate(sc.grid.dim, sc.params.p, sc.params.q)
    pred = predict_long_time(sc.params, sc.beta, sc.gamma,
                             mean_density=sc.totals.mean_density,
                             spectral=spectral)
    print(json_dumps({
        "id": sc.spec.id,
        "valid": True,
        "totals": {"N": sc.totals.N, "mean_density": sc.totals.mean_density},
        "certificate": {
            "dim": cert.dim, "p": cert.p, "q": cert.q,
            "small_chi": cert.small_chi,
            "any_chi_semigroup": cert.any_chi_semigroup,
            "any_chi_energy": cert.any_chi_energy,
            "verdict": cert.verdict.value,
        },
        "prediction": {
            "outcome": pred.outcome.value,
            "rate_claim": pred.rate_claim,
            "mechanism": pred.mechanism,
            "conditional_on_boundedness": pred.conditional_on_boundedness,
            "S_limit": pred.S_limit, "I_limit": pred.I_limit,
            "S_cap": pred.S_cap, "R0": pred.R0,
        },
    }), end="")
    return 0


def _cmd_r0(args) -> int:
    sc = load_scenario(args.scenario)
    res = compute_spectral(sc)
    print(json_dumps({
        "id": sc.spec.id,
        "R0": res.R0,
        "lambda_star": res.lambda_star,
        "iterations": res.iterations,
        "sign_consistent": (res.R0 - 1.0) * res.lambda_star <= 0,
    }), end="")
    return 0


def _cmd_serve(args) -> int:
    try:
        import uvicorn
    except ImportError:
        print("serving needs uvicorn (pip install sislab[serve])", file=sys.stderr)
        return 2
    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sislab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a template across parameter axes")
    p_sweep.add_argument("template")
    p_sweep.add_argument("axes")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_check = sub.add_parser("check", help="validate and classify, no time stepping")
    p_check.add_argument("scenario")
    p_check.set_defaults(func=_cmd_check)

    p_r0 = sub.add_parser("r0", help="basic reproduction number and lambda*")
    p_r0.add_argument("scenario")
    p_r0.set_defaults(func=_cmd_r0)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
