"""sislab: a deterministic laboratory for a cross-diffusive SIS model.

Simulates the initial-boundary-value problem

    S_t = d_S Lap S + chi div(S grad I) - beta S^q I^p + gamma I,
    I_t = d_I Lap I + beta S^q I^p - (gamma + mu) I

on intervals and rectangles with reflecting boundaries, computes its
equilibria and basic reproduction number, classifies parameter regimes, and
checks the corresponding long-time claims at desk scale.  Identical inputs
produce byte-identical artifacts.
"""

__version__ = "0.1.0"

from .classifier import (BoundednessCertificate, MissingInputError, Outcome,
                         Prediction, Verdict, boundedness_certificate,
                         predict_long_time, proportional_rates)
from .diagnostics import (DomainError, Trajectory, TrajectoryRecord, decay_rate,
                          lyapunov_V1, lyapunov_V3, lyapunov_V4,
                          mass_balance_residual, predict_S_star)
from .equilibria import (Equilibrium, HeterogeneousEE, NonUniquenessAlarm,
                         constant_ee_linear, constant_ee_sublinear, dfe,
                         heterogeneous_ee)
from .expressions import ExpressionError, parse_expression
from .grid import FieldShapeError, Grid, GridError, NeumannOperator
from .linsolve import (LinearSolveError, OperatorSolver, TridiagonalFactor,
                       conjugate_gradient, factor_operator_1d)
from .model import (CoefficientError, CoefficientSpec, ConservedTotals,
                    FloorPolicyError, ModelParams, ParameterError, incidence,
                    materialize_coefficient, validate_initial_data)
from .runner import expand_sweep, run_scenario, run_scenario_file, sweep
from .scenario import (Scenario, ScenarioError, ScenarioModel, build_scenario,
                       load_scenario, parse_scenario)
from .spectral import SpectralError, SpectralResult, basic_reproduction_number, principal_pair
from .stepper import (SCHEMES, BlowupAbort, RunConfig, State, Stepper,
                      StepperConfig, StepperConfigError, StepReport,
                      detect_convergence, run, solve_implicit_diffusion)

__all__ = [
    "__version__", "SCHEMES",
    "BlowupAbort", "BoundednessCertificate", "CoefficientError",
    "CoefficientSpec", "ConservedTotals", "DomainError", "Equilibrium",
    "ExpressionError", "FieldShapeError", "FloorPolicyError", "Grid",
    "GridError", "HeterogeneousEE", "LinearSolveError", "MissingInputError",
    "ModelParams", "NeumannOperator", "NonUniquenessAlarm", "OperatorSolver",
    "Outcome", "ParameterError", "Prediction", "RunConfig", "Scenario",
    "ScenarioError", "ScenarioModel", "SpectralError", "SpectralResult",
    "State", "Stepper", "StepperConfig", "StepperConfigError", "StepReport",
    "Trajectory", "TrajectoryRecord", "TridiagonalFactor", "Verdict",
    "basic_reproduction_number", "boundedness_certificate", "build_scenario",
    "conjugate_gradient", "constant_ee_linear", "constant_ee_sublinear",
    "decay_rate", "detect_convergence", "dfe", "expand_sweep",
    "factor_operator_1d", "heterogeneous_ee", "incidence", "load_scenario",
    "lyapunov_V1", "lyapunov_V3", "lyapunov_V4", "mass_balance_residual",
    "materialize_coefficient", "parse_expression", "parse_scenario",
    "predict_S_star", "predict_long_time", "principal_pair",
    "proportional_rates", "run", "run_scenario", "run_scenario_file",
    "solve_implicit_diffusion", "sweep", "validate_initial_data",
]
