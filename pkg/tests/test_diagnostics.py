"""Lyapunov functionals, decay-rate fitting, and trajectory bookkeeping."""

import numpy as np
import pytest

from sislab import (DomainError, Grid, Trajectory, decay_rate, lyapunov_V1,
                    lyapunov_V3, lyapunov_V4, mass_balance_residual)


@pytest.fixture
def g():
    return Grid(extents=(2.0,), cells=(16,))


# ---- V1: entropy distance for sublinear incidence ------------------------------


def test_V1_vanishes_exactly_at_equilibrium(g):
    S = g.constant_field(1.3)
    I = g.constant_field(0.4)
    assert lyapunov_V1(g, S, I, 1.3, 0.4, p=0.6, q=0.8) == 0.0
    assert lyapunov_V1(g, S, I, 1.3, 0.4, p=0.6, q=1.0) == 0.0


def test_V1_positive_away_from_equilibrium(g):
    x = g.centers(0)
    S = 1.3 + 0.2 * np.cos(np.pi * x / 2.0)
    I = 0.4 + 0.1 * np.sin(np.pi * x / 2.0) ** 2
    assert lyapunov_V1(g, S, I, 1.3, 0.4, p=0.6, q=0.8) > 0.0


@pytest.mark.parametrize("q", [0.5, 0.8, 1.0])
def test_V1_quadratic_expansion_in_S(g, q):
    """Near the equilibrium V1 ~ |Omega| (q / S*) eps^2 / 2 along the S axis,
    which pins down both the convexity constant and the q = 1 log branch."""
    S_star, I_star, p = 1.3, 0.4, 0.6
    eps = 1e-4
    v = lyapunov_V1(g, g.constant_field(S_star + eps), g.constant_field(I_star),
                    S_star, I_star, p=p, q=q)
    predicted = g.omega_measure * (q / S_star) * eps ** 2 / 2.0
    assert v == pytest.approx(predicted, rel=1e-3)


def test_V1_quadratic_expansion_in_I(g):
    """Along the I axis the curvature is (1 - p) / I*."""
    S_star, I_star, p, q = 1.3, 0.4, 0.6, 0.8
    eps = 1e-4
    v = lyapunov_V1(g, g.constant_field(S_star), g.constant_field(I_star + eps),
                    S_star, I_star, p=p, q=q)
    predicted = g.omega_measure * ((1.0 - p) / I_star) * eps ** 2 / 2.0
    assert v == pytest.approx(predicted, rel=1e-3)


def test_V1_log_branch_is_the_q_to_one_limit(g):
    x = g.centers(0)
    S = 1.3 + 0.2 * np.cos(np.pi * x / 2.0)
    I = g.constant_field(0.4)
    at_limit = lyapunov_V1(g, S, I, 1.3, 0.4, p=0.6, q=1.0)
    near = lyapunov_V1(g, S, I, 1.3, 0.4, p=0.6, q=1.0 - 1e-7)
    assert near == pytest.approx(at_limit, rel=1e-5)


def test_V1_domain_guards(g):
    S = g.constant_field(1.0)
    I = g.constant_field(1.0)
    with pytest.raises(DomainError):
        lyapunov_V1(g, S, I, 1.0, 1.0, p=1.0, q=1.0)        # needs p < 1
    with pytest.raises(DomainError):
        lyapunov_V1(g, S, I, 0.0, 1.0, p=0.5, q=1.0)        # degenerate state
    with pytest.raises(DomainError):
        lyapunov_V1(g, g.constant_field(0.0), I, 1.0, 1.0, p=0.5, q=1.0)


# ---- V3 / V4: quadratic functionals for linear incidence ------------------------


def test_V3_hand_value(g):
    S = g.constant_field(1.2)
    I = g.constant_field(0.3)
    # 1/2 (1.2 - 1)^2 + (1.44 - 1) * 0.3 per unit length, |Omega| = 2
    v = lyapunov_V3(g, S, I, mean_density=1.0, r=1.44, q=1.0)
    assert v == pytest.approx(2.0 * (0.5 * 0.04 + 0.44 * 0.3), rel=1e-13)


def test_V3_requires_subthreshold_mean(g):
    S = g.constant_field(1.0)
    I = g.constant_field(1.0)
    with pytest.raises(DomainError):
        lyapunov_V3(g, S, I, mean_density=1.5, r=1.44, q=1.0)


def test_V3_fractional_q_threshold(g):
    S = g.constant_field(1.0)
    I = g.constant_field(0.1)
    # r^(1/q) = 0.81^2 = 0.6561 < 1 = mean density
    with pytest.raises(DomainError):
        lyapunov_V3(g, S, I, mean_density=1.0, r=0.81, q=0.5)
    v = lyapunov_V3(g, S, I, mean_density=0.5, r=0.81, q=0.5)
    assert v == pytest.approx(2.0 * (0.5 * 0.25 + (0.6561 - 0.5) * 0.1), rel=1e-13)


def test_V4_hand_value(g):
    S = g.constant_field(2.0)
    I = g.constant_field(0.2)
    # weight (1 + 2)^2 / (8 * 1 * 2) = 9/16
    v = lyapunov_V4(g, S, I, S_hat=1.5, I_hat=0.4, d_S=1.0, d_I=2.0)
    expected = 2.0 * (0.5 * (0.5 - 0.2) ** 2 + 9.0 / 16.0 * 0.25)
    assert v == pytest.approx(expected, rel=1e-13)


def test_V4_vanishes_at_endemic_state(g):
    v = lyapunov_V4(g, g.constant_field(1.5), g.constant_field(0.4),
                    S_hat=1.5, I_hat=0.4, d_S=1.0, d_I=2.0)
    assert v == 0.0
    with pytest.raises(DomainError):
        lyapunov_V4(g, g.constant_field(1.0), g.constant_field(1.0),
                    S_hat=0.0, I_hat=0.4, d_S=1.0, d_I=2.0)


def test_V4_weight_exceeds_half():
    """(d_S + d_I)^2 / (8 d_S d_I) >= 1/2 with equality only at d_S = d_I;
    the functional dominates the plain quadratic distance."""
    g2 = Grid(extents=(1.0,), cells=(4,))
    S = g2.constant_field(2.0)
    I = g2.constant_field(0.4)
    equal = lyapunov_V4(g2, S, I, 1.5, 0.4, d_S=1.0, d_I=1.0)
    skew = lyapunov_V4(g2, S, I, 1.5, 0.4, d_S=1.0, d_I=4.0)
    assert skew > equal
    assert equal == pytest.approx(0.5 * 0.25 + 0.5 * 0.25, rel=1e-13)


# ---- decay-rate fit ----------------------------------------------------------


def test_decay_rate_exact_exponential():
    t = np.linspace(0.0, 5.0, 41)
    v = 3.0 * np.exp(-1.7 * t)
    assert decay_rate(t, v) == pytest.approx(1.7, rel=1e-12)


def test_decay_rate_constant_series_is_zero():
    t = np.linspace(0.0, 5.0, 20)
    assert decay_rate(t, np.full(20, 2.5)) == pytest.approx(0.0, abs=1e-14)


def test_decay_rate_uses_only_the_tail():
    # transient garbage in the first half must not affect the fit
    t = np.linspace(0.0, 8.0, 40)
    v = 3.0 * np.exp(-1.7 * t)
    v[:18] = 5.0
    assert decay_rate(t, v) == pytest.approx(1.7, rel=1e-12)


def test_decay_rate_guards():
    with pytest.raises(DomainError):
        decay_rate(np.arange(8.0), np.ones(8))         # tail of 4 < 5 points
    with pytest.raises(DomainError):
        decay_rate(np.arange(10.0), np.linspace(1.0, -1.0, 10))   # nonpositive
    with pytest.raises(DomainError):
        decay_rate(np.arange(10.0), np.ones(9))        # length mismatch


# ---- residual bookkeeping ------------------------------------------------------


def test_mass_balance_residual_requires_records(g):
    traj = Trajectory(grid=g, mu=0.1)
    with pytest.raises(DomainError):
        mass_balance_residual(traj, N=1.0)
