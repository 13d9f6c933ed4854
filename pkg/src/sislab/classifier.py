"""Parameter-regime classification: boundedness proofs and long-time limits.

The boundedness certificate records which analytical routes cover a given
(dimension, p, q) triple:

  * small chi        n p + (n-2)^+ q < n + min(n, 2); global boundedness for
                     |chi| small enough (the admissible size is not
                     constructive, so no numeric chi bound is produced);
  * semigroup route  q < 1/(n+1) and p + (n+1) q < 1 + min(1, 2/n); any chi;
  * energy route     10q + 4p < 15 and q + p < 3 (n = 1), or
                     3q + p < 3 and q + p < 2 (n = 2); any chi.

The long-time prediction is a direct transcription of the convergence
theory.  With mortality (mu > 0) the infection always dies out and no
threshold appears; sublinear incidence (p < 1) drags S to zero with it,
p = 1 leaves a flat limit S_star capped by ((gamma + mu) / beta)^(1/q) for
homogeneous rates, and p > 1 decays at an exponential rate of at least
(gamma + mu) / 2.  Without mortality and without cross-diffusion the
structured cases are proportional rates (gamma = r beta) and equal
diffusivities: for p < 1 an endemic state attracts unconditionally, and for
p = 1 the basic reproduction number decides between the disease-free state
and the endemic one.  Everything outside these rows is honestly Unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .equilibria import constant_ee_linear, constant_ee_sublinear
from .model import ModelParams
from .spectral import SpectralResult


class Verdict(str, Enum):
    ANY_CHI = "AnyChi"
    SMALL_CHI_ONLY = "SmallChiOnly"
    UNPROVEN = "Unproven"


class Outcome(str, Enum):
    EXTINCTION_BOTH = "extinction-both"
    DISEASE_FREE = "disease-free"
    CONSTANT_ENDEMIC = "constant-endemic"
    HETEROGENEOUS_ENDEMIC = "heterogeneous-endemic"
    UNKNOWN = "unknown"


class MissingInputError(ValueError):
    """The decision needs an input (spectral data) that was not supplied."""


@dataclass(frozen=True)
class BoundednessCertificate:
    dim: int
    p: float
    q: float
    small_chi: bool
    any_chi_semigroup: bool
    any_chi_energy: bool

    @property
    def verdict(self) -> Verdict:
        if self.any_chi_semigroup or self.any_chi_energy:
            return Verdict.ANY_CHI
        if self.small_chi:
            return Verdict.SMALL_CHI_ONLY
        return Verdict.UNPROVEN


def boundedness_certificate(dim: int, p: float, q: float) -> BoundednessCertificate:
    """Evaluate the three exponent regions; strict inequalities throughout."""
    if dim < 1 or p <= 0 or q <= 0:
        raise ValueError(f"need dim >= 1 and positive exponents, got "
                         f"dim={dim}, p={p}, q={q}")
    n = int(dim)
    small = n * p + max(n - 2, 0) * q < n + min(n, 2)
    semigroup = q < 1.0 / (n + 1) and p + (n + 1) * q < 1.0 + min(1.0, 2.0 / n)
    if n == 1:
        energy = 10 * q + 4 * p < 15 and q + p < 3
    elif n == 2:
        energy = 3 * q + p < 3 and q + p < 2
    else:
        energy = False
    return BoundednessCertificate(dim=n, p=p, q=q, small_chi=small,
                                  any_chi_semigroup=semigroup,
                                  any_chi_energy=energy)


@dataclass(frozen=True)
class Prediction:
    outcome: Outcome
    rate_claim: str                  # "none" | "exponential"
    mechanism: str                   # which convergence result backs the call
    conditional_on_boundedness: bool
    S_limit: float | None = None     # flat limits, when known in advance
    I_limit: float | None = None
    S_cap: float | None = None       # upper bound on the flat S limit (p = 1, mu > 0)
    R0: float | None = None


def proportional_rates(gamma: np.ndarray, beta: np.ndarray) -> tuple[bool, float]:
    """Whether gamma = r beta holds pointwise (to 1e-12 relative), and r.

    The proportionality constant is what the homogeneous-rate theory calls
    r; the spread test compares the cellwise ratio against its mean.
    """
    ratio = np.asarray(gamma, dtype=float) / np.asarray(beta, dtype=float)
    r = float(np.mean(ratio))
    spread = float(np.max(ratio) - np.min(ratio))
    return spread <= 1e-12 * max(abs(r), 1e-300), r


def predict_long_time(params: ModelParams, beta, gamma,
                      mean_density: float | None = None,
                      spectral: SpectralResult | None = None) -> Prediction:
    """Classify the expected long-time behavior for these coefficients.

    beta and gamma are materialized fields.  mean_density (N/|Omega|) fills
    in concrete equilibrium values where the theory pins them down; without
    it the outcome is still decided but the limits stay unspecified.  A p = 1
    threshold question without mortality requires a SpectralResult, since the
    R0 comparison is the decision; asking without one is a missing-input
    error rather than a guess.
    """
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    conditional = params.chi != 0.0
    proportional, r = proportional_rates(gamma, beta)
    homogeneous = (float(np.max(beta) - np.min(beta)) <= 1e-12 * float(np.max(beta))
                   and proportional)

    if params.mu > 0:
        if params.p < 1:
            return Prediction(Outcome.EXTINCTION_BOTH, rate_claim="none",
                              mechanism="mortality-sublinear-extinction",
                              conditional_on_boundedness=conditional,
                              S_limit=0.0, I_limit=0.0)
        if params.p == 1:
            cap = None
            if homogeneous:
                cap = ((float(np.mean(gamma)) + params.mu) / float(np.mean(beta))) \
                    ** (1.0 / params.q)
            return Prediction(Outcome.DISEASE_FREE, rate_claim="none",
                              mechanism="mortality-linear-extinction",
                              conditional_on_boundedness=conditional,
                              I_limit=0.0, S_cap=cap)
        return Prediction(Outcome.DISEASE_FREE, rate_claim="exponential",
                          mechanism="mortality-superlinear-extinction",
                          conditional_on_boundedness=conditional, I_limit=0.0)

    # conservative case mu = 0; the convergence theory has no cross-diffusion
    if params.chi != 0.0:
        return Prediction(Outcome.UNKNOWN, rate_claim="none", mechanism="none",
                          conditional_on_boundedness=True)

    equal_diff = params.d_S == params.d_I
    if params.p < 1:
        if proportional:
            S_val = I_val = None
            if mean_density is not None:
                eq = constant_ee_sublinear(mean_density, r, params.p, params.q)
                S_val, I_val = eq.S_value, eq.I_value
            return Prediction(Outcome.CONSTANT_ENDEMIC, rate_claim="none",
                              mechanism="sublinear-proportional-rates",
                              conditional_on_boundedness=False,
                              S_limit=S_val, I_limit=I_val)
        if equal_diff:
            return Prediction(Outcome.HETEROGENEOUS_ENDEMIC, rate_claim="none",
                              mechanism="sublinear-equal-diffusivities",
                              conditional_on_boundedness=False)
        return Prediction(Outcome.UNKNOWN, rate_claim="none", mechanism="none",
                          conditional_on_boundedness=False)

    if params.p == 1 and (proportional or equal_diff):
        if spectral is None:
            raise MissingInputError(
                "p = 1 threshold prediction needs a SpectralResult for R0")
        R0 = spectral.R0
        if R0 > 1:
            if proportional:
                S_val = I_val = None
                if mean_density is not None:
                    eq = constant_ee_linear(mean_density, r, params.q)
                    if eq is not None:
                        S_val, I_val = eq.S_value, eq.I_value
                return Prediction(Outcome.CONSTANT_ENDEMIC, rate_claim="none",
                                  mechanism="linear-threshold",
                                  conditional_on_boundedness=False,
                                  S_limit=S_val, I_limit=I_val, R0=R0)
            return Prediction(Outcome.HETEROGENEOUS_ENDEMIC, rate_claim="none",
                              mechanism="linear-threshold",
                              conditional_on_boundedness=False, R0=R0)
        return Prediction(Outcome.DISEASE_FREE, rate_claim="none",
                          mechanism="linear-threshold",
                          conditional_on_boundedness=False,
                          S_limit=mean_density, I_limit=0.0, R0=R0)

    return Prediction(Outcome.UNKNOWN, rate_claim="none", mechanism="none",
                      conditional_on_boundedness=False)
