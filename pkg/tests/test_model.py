"""Parameter records, incidence, coefficient materialization, admissibility."""

import numpy as np
import pytest

from sislab import (CoefficientError, CoefficientSpec, ConservedTotals,
                    FieldShapeError, FloorPolicyError, Grid, ModelParams,
                    ParameterError, incidence, materialize_coefficient,
                    validate_initial_data)


# ---- parameters -------------------------------------------------------------

def test_params_accept_valid():
    p = ModelParams(d_S=1.0, d_I=0.5, chi=-0.3, mu=0.0, p=0.7, q=1.2)
    assert p.chi == -0.3


@pytest.mark.parametrize("kw", [
    {"d_S": 0.0}, {"d_I": -1.0}, {"mu": -0.1}, {"p": 0.0}, {"q": -2.0},
    {"chi": float("nan")}, {"d_S": float("inf")},
])
def test_params_reject_bad(kw):
    base = dict(d_S=1.0, d_I=1.0, chi=0.0, mu=0.0, p=1.0, q=1.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        ModelParams(**base)


# ---- incidence ---------------------------------------------------------------

def test_incidence_values():
    # beta S^q I^p elementwise
    assert incidence(2.0, 3.0, 5.0, p=1.0, q=2.0) == pytest.approx(5 * 4 * 3)
    out = incidence(np.array([1.0, 2.0]), np.array([1.0, 0.5]),
                    np.array([1.0, 2.0]), p=2.0, q=1.0)
    assert np.allclose(out, [1.0, 2 * 2 * 0.25])


def test_incidence_zero_base_with_superlinear_power():
    assert incidence(0.0, 3.0, 5.0, p=1.0, q=2.0) == 0.0
    assert incidence(4.0, 0.0, 5.0, p=2.0, q=1.0) == 0.0


def test_incidence_rejects_negative():
    with pytest.raises(ValueError):
        incidence(-1e-16, 1.0, 1.0, p=1.0, q=1.0)


def test_incidence_floor_breach_is_internal_error():
    with pytest.raises(FloorPolicyError):
        incidence(0.0, 1.0, 1.0, p=1.0, q=0.5)
    with pytest.raises(FloorPolicyError):
        incidence(1.0, np.array([0.0, 1.0]), 1.0, p=0.5, q=1.0)


def test_incidence_continuity_toward_zero_base():
    # with p > 0 the term vanishes continuously as I -> 0+
    vals = [incidence(1.0, eps, 1.0, p=0.5, q=1.0) for eps in (1e-4, 1e-8, 1e-12)]
    assert vals[0] > vals[1] > vals[2] > 0


# ---- materialization ----------------------------------------------------------

def test_materialize_constant_and_tabulated():
    g = Grid(extents=(1.0,), cells=(4,))
    assert np.all(materialize_coefficient(CoefficientSpec.constant(2.5), g) == 2.5)
    tab = materialize_coefficient(
        CoefficientSpec.tabulated([1.0, 2.0, 3.0, 4.0]), g)
    assert np.allclose(tab, [1, 2, 3, 4])


def test_materialize_expression_uses_cell_centers():
    g = Grid(extents=(2.0,), cells=(4,))
    out = materialize_coefficient(CoefficientSpec.expression("1 + x"), g)
    assert np.allclose(out, 1.0 + g.centers(0))


def test_materialize_expression_2d():
    g = Grid(extents=(1.0, 1.0), cells=(3, 4))
    out = materialize_coefficient(CoefficientSpec.expression("2 + x*y"), g)
    c = g.coordinate_fields()
    assert np.allclose(out, 2.0 + c["x"] * c["y"])


def test_materialize_rejects_nonpositive_with_cell_index():
    g = Grid(extents=(2.0,), cells=(8,))
    with pytest.raises(CoefficientError) as exc:
        materialize_coefficient(CoefficientSpec.expression("x - 1"), g)
    # first bad cell is the leftmost one, x = 0.125
    assert "cell 0" in str(exc.value)


def test_materialize_rejects_nonfinite():
    g = Grid(extents=(1.0,), cells=(4,))
    with pytest.raises(CoefficientError):
        materialize_coefficient(CoefficientSpec.expression("1/(x - x)"), g)


def test_materialize_size_mismatch():
    g = Grid(extents=(1.0,), cells=(4,))
    with pytest.raises(CoefficientError) as exc:
        materialize_coefficient(CoefficientSpec.tabulated([1.0, 2.0]), g)
    assert "2 entries" in str(exc.value)


def test_materialize_nonpositive_allowed_for_initial_data():
    g = Grid(extents=(1.0,), cells=(4,))
    out = materialize_coefficient(CoefficientSpec.constant(0.0), g, positive=False)
    assert np.all(out == 0.0)


# ---- admissibility -------------------------------------------------------------

def test_initial_data_admissible():
    S0 = np.array([1.0, 2.0])
    I0 = np.array([0.0, 0.5])
    assert validate_initial_data(S0, I0, p=1.0, q=1.0) == []


def test_initial_data_violations_reported_together():
    S0 = np.array([-1.0, 2.0])
    I0 = np.array([0.0, 0.0])
    msgs = validate_initial_data(S0, I0, p=1.0, q=1.0)
    assert any("S0" in m and "nonnegative" in m for m in msgs)
    assert any("identically" in m for m in msgs)


def test_initial_data_sublinear_clauses():
    S0 = np.array([0.0, 2.0])
    I0 = np.array([0.5, 0.5])
    msgs = validate_initial_data(S0, I0, p=1.0, q=0.5)
    assert msgs == ["inf S0 must be positive when q < 1"]
    msgs = validate_initial_data(np.array([1.0, 1.0]), np.array([0.0, 1.0]),
                                 p=0.5, q=1.0)
    assert msgs == ["inf I0 must be positive when p < 1"]
    # the same data is fine when the exponents are not sublinear
    assert validate_initial_data(S0, I0, p=1.0, q=1.0) == []


def test_initial_data_nonfinite():
    msgs = validate_initial_data(np.array([np.nan, 1.0]), np.array([0.0, 1.0]),
                                 p=1.0, q=1.0)
    assert msgs == ["S0 must be finite everywhere"]


def test_initial_data_shape_mismatch_is_structural():
    with pytest.raises(FieldShapeError):
        validate_initial_data(np.zeros(3), np.zeros(4), p=1.0, q=1.0)


# ---- conserved totals -----------------------------------------------------------

def test_totals_from_fields():
    g = Grid(extents=(2.0,), cells=(8,))
    tot = ConservedTotals.from_fields(g, g.constant_field(1.5), g.constant_field(0.5))
    assert tot.N == pytest.approx(4.0)
    assert tot.mean_density == pytest.approx(2.0)


def test_totals_reject_zero_mass():
    with pytest.raises(ParameterError):
        ConservedTotals(N=0.0, omega_measure=1.0)
