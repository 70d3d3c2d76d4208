"""Symmetric 2x2 games in the UV plane.

A game is the row-player matrix ``[[1, U], [V, 0]]`` with actions ordered
(C, D). ``U`` plays the role of the sucker payoff and ``V`` the temptation.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DegeneratePayoffs, DegenerateUtility

U_MIN, U_MAX = -1.0, 2.0
V_MIN, V_MAX = -1.0, 2.0


@dataclass(frozen=True)
class Game:
    U: float
    V: float

    def clipped(self, lo: float = U_MIN, hi: float = U_MAX) -> "Game":
        return Game(min(max(self.U, lo), hi), min(max(self.V, lo), hi))


class GameClass(str, enum.Enum):
    PD = "PD"
    DL = "DL"
    SD = "SD"
    SH = "SH"
    C = "C"
    AC = "AC"
    H = "H"
    UNCLASSIFIED = "UNCLASSIFIED"


def from_canonical(R: float, S: float, T: float, P: float) -> Game:
    """Map canonical payoffs (R, S, T, P) to the UV plane."""
    if R == P:
        raise DegeneratePayoffs("R == P: the UV transform is undefined")
    span = R - P
    return Game((S - P) / span, (T - P) / span)


def payoff_matrices(g: Game, normalize: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Row and column player matrices, indexed [own action][opponent action]
    for the row player and [row action][col action] for the column player.

    With ``normalize`` every entry has the game mean (1 + U + V) / 4
    subtracted.
    """
    row = np.array([[1.0, g.U], [g.V, 0.0]])
    if normalize:
        row = row - row.mean()
    return row, row.T.copy()


def normalized_matrix(U, V, strength: float = 1.0) -> np.ndarray:
    """Vectorised row matrices of shape (..., 2, 2).

    ``strength`` interpolates between raw entries (0) and mean-subtracted
    entries (1).
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    shift = strength * (1.0 + U + V) / 4.0
    top = np.stack([1.0 - shift, U - shift], axis=-1)
    bottom = np.stack([V - shift, -shift], axis=-1)
    return np.stack([top, bottom], axis=-2)


def zero_sumness(g: Game) -> float:
    """Negative Pearson correlation of row and column payoffs over the four
    outcome cells, uniformly weighted."""
    return float(zero_sumness_grid(np.asarray(g.U), np.asarray(g.V)))


def zero_sumness_grid(U, V):
    """Vectorised zero-sumness. Accepts arrays of matching shape."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    mean = (1.0 + U + V) / 4.0
    a1, a2, a3, a4 = 1.0 - mean, U - mean, V - mean, -mean
    # column vector is (1, V, U, 0): same deviations with the middle two swapped
    cov = (a1 * a1 + a2 * a3 + a3 * a2 + a4 * a4) / 4.0
    var = (a1 * a1 + a2 * a2 + a3 * a3 + a4 * a4) / 4.0
    return -cov / var


def classify(g: Game, dl_corner: bool = True) -> GameClass:
    """Label a game by the strict ordering of (R, S, T, P) = (1, U, V, 0).

    Deadlock's ordering T > P > R > S cannot hold once R = 1 > P = 0, so with
    ``dl_corner`` the region U > 1, V < 0 is labelled DL instead.
    """
    U, V = g.U, g.V
    if V > 1 and U < 0:
        return GameClass.PD
    if V > 1 and 0 < U < 1:
        return GameClass.SD
    if 0 < V < 1 and U < 0:
        return GameClass.SH
    if 1 > U > V > 0:
        return GameClass.H
    if U < 0 and V < 0:
        return GameClass.C
    if U > 1 and V > 1:
        return GameClass.AC
    if dl_corner and U > 1 and V < 0:
        return GameClass.DL
    return GameClass.UNCLASSIFIED


COORDINATION_CLASSES = frozenset({GameClass.C, GameClass.SH, GameClass.H})


def perceived_game(g: Game, u: Callable[[float], float]) -> Game:
    """Re-express the subjective payoffs u(1), u(U), u(V), u(0) in UV form.

    ``u`` is any scalar utility; a :class:`~gamenorms.utility.UtilityModel`
    works since it is callable.
    """
    u0 = float(u(0.0))
    u1 = float(u(1.0))
    if u1 == u0:
        raise DegenerateUtility("u(1) == u(0): subjective game has no scale")
    span = u1 - u0
    return Game((float(u(g.U)) - u0) / span, (float(u(g.V)) - u0) / span)


def grid_axes(n_u: int = 51, n_v: int = 51, u_range=(U_MIN, U_MAX), v_range=(V_MIN, V_MAX)):
    return np.linspace(*u_range, n_u), np.linspace(*v_range, n_v)


def write_grid_csv(path, u_axis: Iterable[float], v_axis: Iterable[float], dl_corner: bool = True) -> None:
    """Write U,V,Z,class_label for every grid point, U-major."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["U", "V", "Z", "class_label"])
        for U in u_axis:
            for V in v_axis:
                g = Game(float(U), float(V))
                w.writerow([repr(g.U), repr(g.V), repr(zero_sumness(g)), classify(g, dl_corner).value])
