"""FastAPI application exposing the laboratory over HTTP.

Endpoints mirror the CLI verbs: /check and /r0 answer without time stepping,
/run and /sweep execute and persist artifacts under the service output root
(SISLAB_OUT or ./sislab-out).  Scenario validation failures surface as 422
responses with the violation list; solver-side failures (non-uniqueness
alarms, iteration breakdowns) map to 409 since the request was well-formed
but the computation refused.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..classifier import boundedness_certificate, predict_long_time
from ..diagnostics import DomainError
from ..equilibria import NonUniquenessAlarm
from ..linsolve import LinearSolveError
from ..runner import SweepError, compute_spectral, needs_spectral, run_scenario, sweep
from ..scenario import ScenarioError, ScenarioModel, build_scenario
from ..spectral import SpectralError
from .models import (CertificatePayload, CheckResponse, PredictionPayload,
                     RunRequest, RunResponse, SpectralResponse, SweepRequest,
                     SweepResponse)

app = FastAPI(title="sislab", version=__version__,
              description="cross-diffusive SIS laboratory")


def _out_root() -> Path:
    return Path(os.environ.get("SISLAB_OUT", "sislab-out"))


def _materialize(model: ScenarioModel):
    try:
        return build_scenario(model)
    except ScenarioError as err:
        raise HTTPException(status_code=422,
                            detail={"message": str(err), "violations": err.details})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/check", response_model=CheckResponse)
def check(model: ScenarioModel) -> CheckResponse:
    sc = _materialize(model)
    spectral = compute_spectral(sc) if needs_spectral(sc) else None
    cert = boundedness_certificate(sc.grid.dim, sc.params.p, sc.params.q)
    pred = predict_long_time(sc.params, sc.beta, sc.gamma,
                             mean_density=sc.totals.mean_density,
                             spectral=spectral)
    return CheckResponse(
        id=sc.spec.id, valid=True, N=sc.totals.N,
        mean_density=sc.totals.mean_density,
        certificate=CertificatePayload(
            dim=cert.dim, p=cert.p, q=cert.q, small_chi=cert.small_chi,
            any_chi_semigroup=cert.any_chi_semigroup,
            any_chi_energy=cert.any_chi_energy, verdict=cert.verdict.value),
        prediction=PredictionPayload(
            outcome=pred.outcome.value, rate_claim=pred.rate_claim,
            mechanism=pred.mechanism,
            conditional_on_boundedness=pred.conditional_on_boundedness,
            S_limit=pred.S_limit, I_limit=pred.I_limit,
            S_cap=pred.S_cap, R0=pred.R0))


@app.post("/r0", response_model=SpectralResponse)
def r0(model: ScenarioModel) -> SpectralResponse:
    sc = _materialize(model)
    try:
        res = compute_spectral(sc)
    except SpectralError as err:
        raise HTTPException(status_code=409, detail=str(err))
    return SpectralResponse(
        id=sc.spec.id, R0=res.R0, lambda_star=res.lambda_star,
        iterations=res.iterations,
        sign_consistent=(res.R0 - 1.0) * res.lambda_star <= 0)


@app.post("/run", response_model=RunResponse)
def run_endpoint(request: RunRequest) -> RunResponse:
    sc = _materialize(request.scenario)
    out_dir = _out_root() / sc.spec.id
    try:
        summary = run_scenario(sc, out_dir)
    except (NonUniquenessAlarm, LinearSolveError, SpectralError, DomainError) as err:
        raise HTTPException(status_code=409, detail=str(err))
    return RunResponse(id=sc.spec.id, artifact_dir=str(out_dir), summary=summary)


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(request: SweepRequest) -> SweepResponse:
    out_root = _out_root() / f"{request.template.get('id', 'sweep')}-sweep"
    try:
        rows = sweep(request.template, request.axes, out_root, jobs=request.jobs)
    except SweepError as err:
        raise HTTPException(status_code=422, detail=str(err))
    failures = sum(1 for r in rows if r[-1] is not None)
    return SweepResponse(artifact_dir=str(out_root), runs=len(rows),
                         failures=failures,
                         results_csv=str(out_root / "results.csv"))
