import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gamenorms.errors import DegeneratePayoffs, DegenerateUtility
from gamenorms.games import (
    COORDINATION_CLASSES, Game, GameClass, classify, from_canonical, normalized_matrix,
    payoff_matrices, perceived_game, write_grid_csv, zero_sumness, zero_sumness_grid,
)
from gamenorms.utility import UtilityModel

coord = st.floats(-1.0, 2.0, allow_nan=False)


def _corr_oracle(U, V):
    row = np.array([1.0, U, V, 0.0])
    col = np.array([1.0, V, U, 0.0])
    return -np.corrcoef(row, col)[0, 1]


def _class_oracle(U, V):
    # rank orderings of (R, S, T, P) = (1, U, V, 0)
    R, S, T, P = 1.0, U, V, 0.0
    if T > R > P > S:
        return GameClass.PD
    if T > R > S > P:
        return GameClass.SD
    if R > T > P > S:
        return GameClass.SH
    if R > S > T > P:
        return GameClass.H
    if R > P > max(S, T):
        return GameClass.C
    if min(S, T) > R:
        return GameClass.AC
    if S > R and T < P:
        return GameClass.DL
    return GameClass.UNCLASSIFIED


def test_from_canonical_textbook_pd():
    g = from_canonical(3, 0, 5, 1)
    assert g == Game(-0.5, 2.0)
    assert classify(g) is GameClass.PD


def test_from_canonical_degenerate():
    with pytest.raises(DegeneratePayoffs):
        from_canonical(1, 0, 2, 1)


def test_payoff_matrices_transpose_and_mean():
    row, col = payoff_matrices(Game(0.3, 1.7))
    np.testing.assert_array_equal(col, row.T)
    nrow, _ = payoff_matrices(Game(0.3, 1.7), normalize=True)
    assert abs(nrow.sum()) < 1e-15
    np.testing.assert_allclose(normalized_matrix(0.3, 1.7), nrow)
    np.testing.assert_allclose(normalized_matrix(0.3, 1.7, strength=0.0), row)


@pytest.mark.parametrize("g,cls", [
    (Game(-0.5, 1.5), GameClass.PD), (Game(0.5, 1.5), GameClass.SD),
    (Game(-0.5, 0.5), GameClass.SH), (Game(0.7, 0.3), GameClass.H),
    (Game(-0.5, -0.5), GameClass.C), (Game(1.5, 1.5), GameClass.AC),
    (Game(1.5, -0.5), GameClass.DL), (Game(0.3, 0.7), GameClass.UNCLASSIFIED),
    (Game(0.0, 1.5), GameClass.UNCLASSIFIED),
])
def test_classify_examples(g, cls):
    assert classify(g) is cls


def test_classify_without_dl_corner():
    assert classify(Game(1.5, -0.5), dl_corner=False) is GameClass.UNCLASSIFIED


def test_coordination_classes():
    assert COORDINATION_CLASSES == {GameClass.C, GameClass.SH, GameClass.H}


@given(coord, coord)
def test_classify_matches_ordering_oracle(U, V):
    assume(all(abs(x - b) > 1e-9 for x in (U, V) for b in (0.0, 1.0)) and abs(U - V) > 1e-9)
    assert classify(Game(U, V)) is _class_oracle(U, V)


def test_zero_sumness_values():
    assert zero_sumness(Game(-1.0, 2.0)) == pytest.approx(0.8, abs=1e-9)
    assert zero_sumness(Game(0.4, 0.4)) == -1.0


@given(coord)
def test_zero_sumness_symmetric_diagonal(U):
    assert zero_sumness(Game(U, U)) == pytest.approx(-1.0, abs=1e-12)


@given(coord, coord)
def test_zero_sumness_matches_pearson(U, V):
    assert zero_sumness(Game(U, V)) == pytest.approx(_corr_oracle(U, V), abs=1e-9)


def test_zero_sumness_grid_below_one():
    u = np.linspace(-1, 2, 101)
    U, V = np.meshgrid(u, u, indexing="ij")
    Z = zero_sumness_grid(U, V)
    assert Z.max() < 1.0 and Z.min() >= -1.0 - 1e-12


def test_perceived_game_identity_and_degenerate():
    g = Game(-0.3, 1.4)
    assert perceived_game(g, UtilityModel.risk_neutral()) == g
    with pytest.raises(DegenerateUtility):
        perceived_game(g, lambda c: 0.0)


def test_perceived_game_linex_by_hand():
    eta = 1.0
    u = UtilityModel.linex(eta)
    f = lambda c: -np.exp(-eta * c) + eta * c + 1.0
    g = perceived_game(Game(2.0, -1.0), u)
    span = f(1.0) - f(0.0)
    assert g.U == pytest.approx((f(2.0) - f(0.0)) / span)
    assert g.V == pytest.approx((f(-1.0) - f(0.0)) / span)


def test_write_grid_csv(tmp_path):
    p = tmp_path / "g.csv"
    write_grid_csv(p, [-1.0, 2.0], [-1.0, 2.0])
    lines = p.read_text().splitlines()
    assert lines[0] == "U,V,Z,class_label"
    assert len(lines) == 5
    assert any(line.startswith("-1.0,2.0,") and line.endswith("PD") for line in lines)
