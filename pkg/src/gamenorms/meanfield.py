"""Population response, fitness landscape and attractors over the UV plane."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .games import Game, GameClass, classify, normalized_matrix, perceived_game, zero_sumness
from .qre import BatchDiagnostics, SolverOptions, symmetric_qre
from .utility import UtilityModel, evaluate

FITNESS_MODES = ("normalized", "raw")
BOUNDARY_MODES = ("projected", "raw")


@dataclass(frozen=True)
class TraitDistributions:
    """Lognormal log-means and log-sds of precision and risk sensitivity."""

    mu_lambda: float = 1.0
    sigma_lambda: float = 0.5
    mu_eta: float = 1.4
    sigma_eta: float = 0.5

    def __post_init__(self):
        if self.sigma_lambda < 0 or self.sigma_eta < 0:
            raise ValueError("lognormal sigmas must be non-negative")


@dataclass(frozen=True)
class GridSpec:
    u_min: float = -1.0
    u_max: float = 2.0
    v_min: float = -1.0
    v_max: float = 2.0
    n_u: int = 51
    n_v: int = 51

    def __post_init__(self):
        if self.n_u < 3 or self.n_v < 3:
            raise ValueError("grid needs at least 3 points per axis")
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError("grid ranges must satisfy min < max")

    @property
    def u_axis(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_u)

    @property
    def v_axis(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_v)

    def mesh(self):
        return np.meshgrid(self.u_axis, self.v_axis, indexing="ij")

    @property
    def centroid(self) -> tuple[float, float]:
        return 0.5 * (self.u_min + self.u_max), 0.5 * (self.v_min + self.v_max)


@dataclass(frozen=True)
class Attractor:
    U: float
    V: float
    phi: float
    grad_norm: float
    game_class: GameClass
    Z: float

    def to_dict(self) -> dict:
        return {"U": self.U, "V": self.V, "phi": self.phi, "class": self.game_class.value, "Z": self.Z}


@dataclass
class Landscape:
    grid: GridSpec
    S: np.ndarray
    phi: np.ndarray
    grad_u: np.ndarray
    grad_v: np.ndarray
    attractors: list[Attractor] = field(default_factory=list)
    diagnostics: BatchDiagnostics = field(default_factory=BatchDiagnostics)

    @property
    def grad_norm(self) -> np.ndarray:
        return np.hypot(self.grad_u, self.grad_v)

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.phi), self.phi.shape)
        return float(self.grid.u_axis[i]), float(self.grid.v_axis[j])

    def rows(self):
        """(U, V, S, Phi, gradU, gradV) tuples, U-major."""
        for i, U in enumerate(self.grid.u_axis):
            for j, V in enumerate(self.grid.v_axis):
                yield (float(U), float(V), float(self.S[i, j]), float(self.phi[i, j]),
                       float(self.grad_u[i, j]), float(self.grad_v[i, j]))


def gh_nodes(n: int, mu: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Lognormal evaluation points and probability weights from n-point
    Gauss-Hermite quadrature."""
    if n < 1:
        raise ValueError("need at least one node")
    xi, w = hermgauss(n)
    return np.exp(mu + math.sqrt(2.0) * sigma * xi), w / math.sqrt(math.pi)


def _cooperation(U, V, lam, eta, u: UtilityModel, opts: SolverOptions | None):
    """Symmetric-QRE cooperation probability for every (game, lam, eta).

    ``U``/``V`` have shape G; ``lam``/``eta`` broadcast against G.
    """
    m = normalized_matrix(U, V)
    eta_b = np.asarray(eta, dtype=float)[..., None, None]
    subj = evaluate(u, m, eta=eta_b) if u.kind != "risk_neutral" else m
    return symmetric_qre(subj, lam, opts)


def population_response(U, V, dists: TraitDistributions, u: UtilityModel, n: int = 5,
                        opts: SolverOptions | None = None):
    """S over arrays of games by n x n Gauss-Hermite quadrature.

    Returns ``(S, diagnostics)`` with S shaped like ``U``.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    lam_nodes, lam_w = gh_nodes(n, dists.mu_lambda, dists.sigma_lambda)
    eta_nodes, eta_w = gh_nodes(n, dists.mu_eta, dists.sigma_eta)
    if u.kind == "risk_neutral":
        # eta does not enter; collapse that axis
        eta_nodes, eta_w = np.array([u.eta]), np.array([1.0])
    lam = lam_nodes[:, None]
    eta = eta_nodes[None, :]
    wts = lam_w[:, None] * eta_w[None, :]
    # node axes in front of the game axes
    extra = (1,) * U.ndim
    p, diag = _cooperation(U, V, lam.reshape(lam.shape + extra), eta.reshape(eta.shape + extra), u, opts)
    S = np.tensordot(wts, p, axes=([0, 1], [0, 1]))
    return np.clip(S, 0.0, 1.0), diag


def aggregate_S(g: Game, dists: TraitDistributions, u: UtilityModel, n: int = 5,
                opts: SolverOptions | None = None) -> float:
    S, _ = population_response(np.array([g.U]), np.array([g.V]), dists, u, n, opts)
    return float(S[0])


def monte_carlo_S(g: Game, dists: TraitDistributions, u: UtilityModel, draws: int,
                  rng: np.random.Generator) -> float:
    """Plain Monte Carlo estimate of S(g) from lognormal trait draws."""
    lam = rng.lognormal(dists.mu_lambda, dists.sigma_lambda, size=draws)
    eta = rng.lognormal(dists.mu_eta, dists.sigma_eta, size=draws)
    p, _ = _cooperation(np.array(g.U), np.array(g.V), lam, eta, u, None)
    return float(np.mean(p))


def fitness_K(U: float, V: float, Sg, Sg2, normalize: bool = False):
    """Expected payoff to a type-g player (game (U, V)) meeting a player whose
    cooperation probability is ``Sg2``.

    Raw form uses payoffs (1, U, V, 0); ``normalize`` subtracts the game
    mean (1 + U + V) / 4 from every cell.
    """
    k = Sg * Sg2 + Sg * (1.0 - Sg2) * U + (1.0 - Sg) * Sg2 * V
    if normalize:
        k = k - (1.0 + U + V) / 4.0
    return k


def fitness_field(grid: GridSpec, S: np.ndarray, fitness: str = "normalized") -> np.ndarray:
    """Phi(g) = mean over grid points g' of K(g, g').

    K is linear in S(g'), so the mean over the grid collapses to K evaluated
    at the grid-average cooperation rate.
    """
    if fitness not in FITNESS_MODES:
        raise ValueError(f"fitness must be one of {FITNESS_MODES}")
    U, V = grid.mesh()
    return fitness_K(U, V, S, float(S.mean()), normalize=(fitness == "normalized"))


def gradient(grid: GridSpec, phi: np.ndarray):
    hu = (grid.u_max - grid.u_min) / (grid.n_u - 1)
    hv = (grid.v_max - grid.v_min) / (grid.n_v - 1)
    gu, gv = np.gradient(phi, hu, hv, edge_order=1)
    return gu, gv


def _projected(grid: GridSpec, gu, gv):
    """Drop gradient components that point out of the box on its faces."""
    pu, pv = gu.copy(), gv.copy()
    pu[0, :] = np.maximum(pu[0, :], 0.0)
    pu[-1, :] = np.minimum(pu[-1, :], 0.0)
    pv[:, 0] = np.maximum(pv[:, 0], 0.0)
    pv[:, -1] = np.minimum(pv[:, -1], 0.0)
    return pu, pv


def _strict_local_max(phi: np.ndarray) -> np.ndarray:
    """Cells strictly above every existing 8-neighbour."""
    n_u, n_v = phi.shape
    padded = np.pad(phi, 1, constant_values=-np.inf)
    is_max = np.ones_like(phi, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di:1 + di + n_u, 1 + dj:1 + dj + n_v]
            is_max &= phi > nb
    return is_max


def hessian_negative_definite(grid: GridSpec, phi: np.ndarray, i: int, j: int) -> bool:
    """Finite-difference Hessian check at an interior cell."""
    if i in (0, phi.shape[0] - 1) or j in (0, phi.shape[1] - 1):
        return True
    hu = (grid.u_max - grid.u_min) / (grid.n_u - 1)
    hv = (grid.v_max - grid.v_min) / (grid.n_v - 1)
    fuu = (phi[i + 1, j] - 2 * phi[i, j] + phi[i - 1, j]) / hu ** 2
    fvv = (phi[i, j + 1] - 2 * phi[i, j] + phi[i, j - 1]) / hv ** 2
    fuv = (phi[i + 1, j + 1] - phi[i + 1, j - 1] - phi[i - 1, j + 1] + phi[i - 1, j - 1]) / (4 * hu * hv)
    return bool(np.all(np.linalg.eigvalsh([[fuu, fuv], [fuv, fvv]]) < 0))


def find_attractors(L: Landscape, eps: float | None = None, eps_frac: float = 0.05,
                    boundary: str = "projected", hessian_check: bool = False,
                    dl_corner: bool = True) -> list[Attractor]:
    """Strict 8-neighbour maxima whose gradient norm is below ``eps``.

    ``eps`` defaults to ``eps_frac`` times the largest gradient norm on the
    grid. With ``boundary="projected"`` the test on the box faces ignores
    gradient components pointing outward, so a maximum pressed against the
    edge of the domain still counts as a rest point of the constrained flow.
    """
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
    full = np.hypot(L.grad_u, L.grad_v)
    if eps is None:
        eps = eps_frac * float(full.max())
    if boundary == "projected":
        pu, pv = _projected(L.grid, L.grad_u, L.grad_v)
        test = np.hypot(pu, pv)
    else:
        test = full
    cand = _strict_local_max(L.phi) & (test < eps)
    out = []
    u_axis, v_axis = L.grid.u_axis, L.grid.v_axis
    for i, j in zip(*np.nonzero(cand)):
        if hessian_check and not hessian_negative_definite(L.grid, L.phi, i, j):
            continue
        g = Game(float(u_axis[i]), float(v_axis[j]))
        out.append(Attractor(g.U, g.V, float(L.phi[i, j]), float(test[i, j]),
                             classify(g, dl_corner), zero_sumness(g)))
    out.sort(key=lambda a: -a.phi)
    return out


def _response_rows(grid, rows, dists, u, n, opts):
    U, V = grid.mesh()
    return population_response(U[rows], V[rows], dists, u, n, opts)


def landscape(grid: GridSpec, dists: TraitDistributions, u: UtilityModel, n: int = 5, *,
              fitness: str = "normalized", boundary: str = "projected", eps_frac: float = 0.05,
              hessian_check: bool = False, dl_corner: bool = True, workers: int = 1,
              opts: SolverOptions | None = None) -> Landscape:
    """S on every grid cell, the fitness field, its gradient and attractors.

    Rows of the grid are independent work items; with ``workers > 1`` they
    are evaluated on a thread pool and stitched back in row order.
    """
    chunks = np.array_split(np.arange(grid.n_u), max(1, min(workers, grid.n_u)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: _response_rows(grid, r, dists, u, n, opts), chunks))
    else:
        parts = [_response_rows(grid, r, dists, u, n, opts) for r in chunks]
    S = np.concatenate([p[0] for p in parts], axis=0)
    diag = BatchDiagnostics()
    for _, d in parts:
        diag.merge(d)
    phi = fitness_field(grid, S, fitness)
    gu, gv = gradient(grid, phi)
    L = Landscape(grid, S, phi, gu, gv, diagnostics=diag)
    L.attractors = find_attractors(L, eps_frac=eps_frac, boundary=boundary,
                                   hessian_check=hessian_check, dl_corner=dl_corner)
    return L


@dataclass(frozen=True)
class TrajectoryPoint:
    mu_eta: float
    mu_lambda: float
    attractor: Attractor | None
    perceived: Game | None

    def to_row(self) -> dict:
        a, p = self.attractor, self.perceived
        nan = float("nan")
        return {
            "mu_eta": self.mu_eta,
            "mu_lambda": self.mu_lambda,
            "U": a.U if a else nan,
            "V": a.V if a else nan,
            "class": a.game_class.value if a else "",
            "U_hat": p.U if p else nan,
            "V_hat": p.V if p else nan,
        }


def trajectory(loop: Sequence[tuple[float, float]], grid: GridSpec, u: UtilityModel, n: int = 5,
               base: TraitDistributions | None = None, **landscape_kw) -> list[TrajectoryPoint]:
    """Top attractor, and how it looks through the utility at eta = e^mu_eta,
    for each (mu_eta, mu_lambda) waypoint."""
    if not loop:
        raise ValueError("trajectory needs at least one waypoint")
    base = base or TraitDistributions()
    out = []
    for mu_eta, mu_lambda in loop:
        dists = replace(base, mu_eta=float(mu_eta), mu_lambda=float(mu_lambda))
        L = landscape(grid, dists, u, n, **landscape_kw)
        top = L.attractors[0] if L.attractors else None
        seen = None
        if top is not None:
            seen = perceived_game(Game(top.U, top.V), u.with_eta(math.exp(mu_eta)))
        out.append(TrajectoryPoint(float(mu_eta), float(mu_lambda), top, seen))
    return out
