"""Request and response schemas of the HTTP service.

Requests embed the same ScenarioModel that scenario files use, so a JSON
scenario can be POSTed verbatim.  Responses carry the same summary payloads
the CLI writes to disk; the service stores artifacts under its output root
and reports where they went.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..scenario import ScenarioModel


class CertificatePayload(BaseModel):
    dim: int
    p: float
    q: float
    small_chi: bool
    any_chi_semigroup: bool
    any_chi_energy: bool
    verdict: str


class PredictionPayload(BaseModel):
    outcome: str
    rate_claim: str
    mechanism: str
    conditional_on_boundedness: bool
    S_limit: float | None = None
    I_limit: float | None = None
    S_cap: float | None = None
    R0: float | None = None


class CheckResponse(BaseModel):
    id: str
    valid: bool
    N: float
    mean_density: float
    certificate: CertificatePayload
    prediction: PredictionPayload


class SpectralResponse(BaseModel):
    id: str
    R0: float
    lambda_star: float
    iterations: int
    sign_consistent: bool


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: ScenarioModel


class RunResponse(BaseModel):
    id: str
    artifact_dir: str
    summary: dict


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    template: dict
    axes: dict[str, list] = Field(min_length=1)
    jobs: int = Field(default=1, ge=1, le=64)


class SweepResponse(BaseModel):
    artifact_dir: str
    runs: int
    failures: int
    results_csv: str
