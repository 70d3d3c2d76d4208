"""Logit quantal response equilibrium for 2x2 games.

Matrices are given from each player's own perspective: ``m[own][opp]`` with
action 0 = C and 1 = D. The scalar solver sticks to ``math`` because the
agent-based model calls it once per interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_DAMPING = 0.5


@dataclass(frozen=True)
class QreSolution:
    p1c: float
    p2c: float
    iterations: int
    residual: float
    fallback: bool = False


@dataclass(frozen=True)
class SolverOptions:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    damping: float = DEFAULT_DAMPING
    start: tuple[float, float] = (0.5, 0.5)


def logit_response(utilities, lam: float) -> np.ndarray:
    """Softmax with inverse temperature ``lam``."""
    u = np.asarray(utilities, dtype=float)
    z = lam * (u - u.max())
    e = np.exp(z)
    return e / e.sum()


def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _entries(m):
    return float(m[0][0]), float(m[0][1]), float(m[1][0]), float(m[1][1])


def best_responses(m1, m2, lam1, lam2, p1c, p2c) -> tuple[float, float]:
    """Logit responses of each player to the other's current mixed strategy."""
    a, b, c, d = _entries(m1)
    e, f, g, h = _entries(m2)
    br1 = sigmoid(lam1 * (p2c * (a - c) + (1.0 - p2c) * (b - d)))
    br2 = sigmoid(lam2 * (p1c * (e - g) + (1.0 - p1c) * (f - h)))
    return br1, br2


def fixed_point_residual(m1, m2, lam1, lam2, p1c, p2c) -> float:
    br1, br2 = best_responses(m1, m2, lam1, lam2, p1c, p2c)
    return max(abs(p1c - br1), abs(p2c - br2))


def solve_2x2(m1, m2, lam1: float, lam2: float, opts: SolverOptions | None = None) -> QreSolution:
    """Damped fixed-point iteration ``p <- (1-k) p + k BR(p)``.

    Raises :class:`NoConvergence` carrying the last iterate when the
    residual is still above tolerance after ``max_iter`` steps.
    """
    opts = opts or SolverOptions()
    a, b, c, d = _entries(m1)
    e, f, g, h = _entries(m2)
    x1, y1 = a - c, b - d
    x2, y2 = e - g, f - h
    k = opts.damping
    p1, p2 = opts.start
    res = float("inf")
    for it in range(1, opts.max_iter + 1):
        br1 = sigmoid(lam1 * (p2 * x1 + (1.0 - p2) * y1))
        br2 = sigmoid(lam2 * (p1 * x2 + (1.0 - p1) * y2))
        res = max(abs(p1 - br1), abs(p2 - br2))
        if res <= opts.tol:
            return QreSolution(p1, p2, it - 1, res)
        p1 = (1.0 - k) * p1 + k * br1
        p2 = (1.0 - k) * p2 + k * br2
    res = fixed_point_residual(m1, m2, lam1, lam2, p1, p2)
    if res <= opts.tol:
        return QreSolution(p1, p2, opts.max_iter, res)
    raise NoConvergence(
        f"QRE residual {res:.3e} above tol {opts.tol:.1e} after {opts.max_iter} iterations",
        p1c=p1, p2c=p2, iterations=opts.max_iter, residual=res,
    )


def solve_2x2_bracketed(m1, m2, lam1: float, lam2: float) -> QreSolution:
    """Bisection on the composed response ``p1 -> BR1(BR2(p1))``.

    A root always exists on [0, 1]. Used as a fallback when the damped
    iteration cycles (anti-coordination at high precision).
    """
    a, b, c, d = _entries(m1)
    e, f, g, h = _entries(m2)
    x1, y1 = a - c, b - d
    x2, y2 = e - g, f - h

    def br2(p1):
        return sigmoid(lam2 * (p1 * x2 + (1.0 - p1) * y2))

    def gap(p1):
        p2 = br2(p1)
        return sigmoid(lam1 * (p2 * x1 + (1.0 - p2) * y1)) - p1

    lo, hi = 0.0, 1.0
    it = 0
    while True:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or it > 200:
            break
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    p1 = lo if abs(gap(lo)) <= abs(gap(hi)) else hi
    p2 = br2(p1)
    res = fixed_point_residual(m1, m2, lam1, lam2, p1, p2)
    return QreSolution(p1, p2, it, res, fallback=True)


def solve_2x2_safe(m1, m2, lam1: float, lam2: float, opts: SolverOptions | None = None) -> QreSolution:
    """Damped iteration, falling back to bisection on :class:`NoConvergence`.

    The returned solution has ``fallback=True`` when the bracketed solver
    was needed; callers count those as diagnostics.
    """
    try:
        return solve_2x2(m1, m2, lam1, lam2, opts)
    except NoConvergence:
        return solve_2x2_bracketed(m1, m2, lam1, lam2)


@dataclass
class BatchDiagnostics:
    solves: int = 0
    fallbacks: int = 0
    failures: int = 0

    def merge(self, other: "BatchDiagnostics") -> None:
        self.solves += other.solves
        self.fallbacks += other.fallbacks
        self.failures += other.failures


def _vsigmoid(x):
    # exp of a non-positive argument never overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def symmetric_qre(m, lam, opts: SolverOptions | None = None):
    """Cooperation probability at the symmetric QRE of identical players.

    ``m`` has shape (..., 2, 2) (own-perspective subjective matrix) and
    ``lam`` broadcasts against ``m.shape[:-2]``. The damped iteration from
    the centroid keeps both players identical, so it reduces to a scalar map
    per cell. Cells that do not settle are finished by vectorised bisection
    on the same scalar equation.

    Returns ``(p, diagnostics)``.
    """
    opts = opts or SolverOptions()
    m = np.asarray(m, dtype=float)
    shape = np.broadcast_shapes(m.shape[:-2], np.shape(lam))
    x = np.broadcast_to(m[..., 0, 0] - m[..., 1, 0], shape).ravel()
    y = np.broadcast_to(m[..., 0, 1] - m[..., 1, 1], shape).ravel()
    lam = np.broadcast_to(np.asarray(lam, dtype=float), shape).ravel()
    p = np.full(x.shape, opts.start[0])
    k = opts.damping
    active = np.arange(p.size)
    for _ in range(opts.max_iter):
        if active.size == 0:
            break
        pa = p[active]
        br = _vsigmoid(lam[active] * (pa * x[active] + (1.0 - pa) * y[active]))
        done = np.abs(pa - br) <= opts.tol
        p[active] = np.where(done, pa, (1.0 - k) * pa + k * br)
        active = active[~done]

    diag = BatchDiagnostics(solves=p.size, fallbacks=int(active.size))
    if active.size:
        xa, ya, la = x[active], y[active], lam[active]
        lo = np.zeros(active.size)
        hi = np.ones(active.size)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            g = _vsigmoid(la * (mid * xa + (1.0 - mid) * ya)) - mid
            lo = np.where(g > 0, mid, lo)
            hi = np.where(g > 0, hi, mid)
        pick = 0.5 * (lo + hi)
        p[active] = pick
        res = np.abs(_vsigmoid(la * (pick * xa + (1.0 - pick) * ya)) - pick)
        diag.failures = int(np.count_nonzero(res > max(opts.tol, 1e-9)))
    return p.reshape(shape), diag
