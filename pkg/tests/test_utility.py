import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamenorms.utility import (
    UtilityModel, apply_to_matrix, evaluate, gain_curvature, linex_value, loss_curvature,
    prospect_value,
)

pay = st.floats(-3.0, 3.0, allow_nan=False)
etas = st.floats(0.01, 5.0)


def test_linex_by_hand():
    assert linex_value(0.0, 1.3) == 0.0
    assert linex_value(1.0, 1.0) == pytest.approx(2.0 - math.exp(-1.0))


def test_prospect_by_hand():
    # eta = 1: gain exponent 1/2, loss exponent 2/3
    assert prospect_value(4.0, 0.0, 1.0, 2.0) == pytest.approx(2.0)
    assert prospect_value(-8.0, 0.0, 1.0, 2.0) == pytest.approx(-2.0 * 4.0)
    assert prospect_value(1.5, 0.5, 1.0, 3.0) == pytest.approx(1.0)


def test_curvature_floors():
    assert gain_curvature(0.0) == 1.0 and loss_curvature(0.0) == 1.0
    assert gain_curvature(100.0) == 0.2 and loss_curvature(100.0) == 0.2


@given(st.lists(pay, min_size=2, max_size=2, unique=True), etas)
def test_linex_monotone(cs, eta):
    lo, hi = sorted(cs)
    assert linex_value(lo, eta) <= linex_value(hi, eta)
    if hi - lo > 1e-9:  # below that the difference can underflow
        assert linex_value(lo, eta) < linex_value(hi, eta)


@given(st.lists(pay, min_size=2, max_size=2, unique=True), etas, st.floats(0.1, 5.0))
def test_prospect_monotone(cs, eta, omega):
    lo, hi = sorted(cs)
    assert prospect_value(lo, 0.0, eta, omega) <= prospect_value(hi, 0.0, eta, omega)


@given(pay, etas, st.floats(0.1, 5.0), st.floats(-1.0, 1.0))
def test_vectorised_matches_scalar(c, eta, omega, ref):
    assert evaluate(UtilityModel.linex(eta), c) == pytest.approx(linex_value(c, eta))
    u = UtilityModel.prospect(eta, omega, ref)
    assert evaluate(u, c) == pytest.approx(prospect_value(c, ref, eta, omega))
    assert u(c) == pytest.approx(prospect_value(c, ref, eta, omega))


def test_eta_override_broadcasts():
    u = UtilityModel.linex(1.0)
    c = np.array([[1.0, -1.0], [0.5, 0.0]])
    eta = np.array([0.5, 2.0])[:, None, None]
    out = evaluate(u, c, eta=eta)
    assert out.shape == (2, 2, 2)
    np.testing.assert_allclose(out[1], evaluate(UtilityModel.linex(2.0), c))


def test_risk_neutral_is_identity():
    m = np.array([[1.0, -0.5], [1.5, 0.0]])
    np.testing.assert_array_equal(apply_to_matrix(UtilityModel.risk_neutral(), m), m)


def test_dict_round_trip():
    u = UtilityModel.prospect(0.7, 2.5, 0.1)
    assert UtilityModel.from_dict(u.to_dict()) == u
    with pytest.raises(ValueError):
        UtilityModel.from_dict({"type": "linex", "gamma": 1})


@pytest.mark.parametrize("kw", [
    dict(kind="cara"), dict(kind="linex", eta=0.0), dict(kind="prospect", omega=0.0),
    dict(kind="prospect", eta=-1.0),
])
def test_invalid_models(kw):
    with pytest.raises(ValueError):
        UtilityModel(**kw)


def test_with_eta():
    assert UtilityModel.linex(1.0).with_eta(2.0) == UtilityModel.linex(2.0)
