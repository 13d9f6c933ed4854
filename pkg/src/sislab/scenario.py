"""Scenario files: the JSON surface of the laboratory.

A scenario pins everything a run needs: domain, parameters, coefficient
profiles, initial data, stepper settings, output cadence, and the list of
analyses to attach.  Validation is strict (unknown keys are errors, not
typos to forgive) and happens in two layers: pydantic for shape and ranges,
then materialization onto the grid with the model-level admissibility checks
on the initial data.  The validated model doubles as the request schema of
the HTTP service, and its fully defaulted dump is echoed into every run
summary so an artifact records exactly what produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .grid import Grid, GridError
from .model import (CoefficientError, CoefficientSpec, ConservedTotals,
                    ModelParams, ParameterError, materialize_coefficient,
                    validate_initial_data)
from .expressions import ExpressionError

ANALYSES = ("certificate", "prediction", "r0", "equilibria", "lyapunov", "rates")


class ScenarioError(ValueError):
    """Anything wrong with a scenario: shape, ranges, or admissibility.

    details holds one message per violation so callers can show them all.
    """

    def __init__(self, message: str, details: list[str] | None = None):
        self.details = details or []
        if self.details:
            message = message + ": " + "; ".join(self.details)
        super().__init__(message)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainModel(_StrictModel):
    extents: list[float] = Field(min_length=1, max_length=2)
    cells: list[int] = Field(min_length=1, max_length=2)


class ParamsModel(_StrictModel):
    d_S: float = Field(gt=0)
    d_I: float = Field(gt=0)
    chi: float = 0.0
    mu: float = Field(default=0.0, ge=0)
    p: float = Field(gt=0)
    q: float = Field(gt=0)


class FieldModel(_StrictModel):
    kind: Literal["constant", "expression", "tabulated"]
    value: float | None = None
    expr: str | None = None
    values: list[float] | None = None

    @model_validator(mode="after")
    def _payload_matches_kind(self):
        needed = {"constant": self.value, "expression": self.expr,
                  "tabulated": self.values}[self.kind]
        if needed is None:
            raise ValueError(f"field of kind '{self.kind}' is missing its payload")
        extras = [n for n, v in (("value", self.value), ("expr", self.expr),
                                 ("values", self.values))
                  if v is not None and v is not needed]
        if extras:
            raise ValueError(
                f"field of kind '{self.kind}' must not also set {extras}")
        return self

    def to_spec(self) -> CoefficientSpec:
        if self.kind == "constant":
            return CoefficientSpec.constant(self.value)
        if self.kind == "expression":
            return CoefficientSpec.expression(self.expr)
        return CoefficientSpec.tabulated(self.values)


class InitialModel(_StrictModel):
    S: FieldModel
    I: FieldModel


class StepperModel(_StrictModel):
    dt: float = Field(gt=0)
    scheme: Literal["backward-euler", "crank-nicolson"] = "backward-euler"
    positivity_floor: float = Field(default=1e-13, gt=0, le=1e-6)
    linear_tol: float = Field(default=1e-10, gt=0, le=1e-4)
    max_dt_shrink: int = Field(default=20, ge=0)


class OutputModel(_StrictModel):
    record_interval: float | None = Field(default=None, gt=0)
    snapshot_times: list[float] = Field(default_factory=list)


class ConvergenceModel(_StrictModel):
    window: int = Field(default=5, ge=1)
    tol: float = Field(default=0.0, ge=0)   # 0 disables early stopping


class ScenarioModel(_StrictModel):
    id: str = Field(min_length=1, pattern=r"^[A-Za-z0-9._=-]+$")
    domain: DomainModel
    params: ParamsModel
    beta: FieldModel
    gamma: FieldModel
    initial: InitialModel
    t_end: float = Field(ge=0)
    stepper: StepperModel
    output: OutputModel = Field(default_factory=OutputModel)
    convergence: ConvergenceModel = Field(default_factory=ConvergenceModel)
    analyses: list[Literal[ANALYSES]] = Field(default_factory=list)


@dataclass(frozen=True)
class Scenario:
    """A scenario after materialization: arrays on the grid, ready to run."""

    spec: ScenarioModel
    grid: Grid
    params: ModelParams
    beta: np.ndarray
    gamma: np.ndarray
    S0: np.ndarray
    I0: np.ndarray
    totals: ConservedTotals


def build_scenario(model: ScenarioModel) -> Scenario:
    """Materialize a validated scenario model onto its grid."""
    try:
        grid = Grid(extents=tuple(model.domain.extents),
                    cells=tuple(model.domain.cells))
        params = ModelParams(**model.params.model_dump())
        beta = materialize_coefficient(model.beta.to_spec(), grid, positive=True)
        gamma = materialize_coefficient(model.gamma.to_spec(), grid, positive=True)
        S0 = materialize_coefficient(model.initial.S.to_spec(), grid, positive=False)
        I0 = materialize_coefficient(model.initial.I.to_spec(), grid, positive=False)
    except (GridError, ParameterError, CoefficientError, ExpressionError) as err:
        raise ScenarioError(f"scenario '{model.id}' cannot be materialized",
                            [str(err)]) from err
    violations = validate_initial_data(S0, I0, params.p, params.q)
    if violations:
        raise ScenarioError(f"scenario '{model.id}' has inadmissible initial data",
                            violations)
    totals = ConservedTotals.from_fields(grid, S0, I0)
    return Scenario(spec=model, grid=grid, params=params, beta=beta, gamma=gamma,
                    S0=S0, I0=I0, totals=totals)


def parse_scenario(data: dict) -> Scenario:
    """Validate a raw dict (already JSON-decoded) and materialize it."""
    try:
        model = ScenarioModel.model_validate(data)
    except ValidationError as err:
        details = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}"
                   for e in err.errors()]
        raise ScenarioError("scenario failed validation", details) from err
    return build_scenario(model)


def load_scenario(path: str | Path) -> Scenario:
    """Read, validate, and materialize a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario file {path}", [str(err)]) from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"scenario file {path} is not valid JSON",
                            [str(err)]) from err
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario file {path} must hold a JSON object")
    return parse_scenario(data)
