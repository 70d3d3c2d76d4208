"""Agent-based model: heterogeneous agents on an adaptive network.

Each period every agent, in a fresh random order, meets a random neighbour,
both play the logit QRE of their prospect-valued matrices, realise material
payoffs, and the initiator may learn from the opponent and re-choose its
game. A homophily rewiring pass closes the period. The first ``warmup``
periods only play; nothing adapts.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import networkx as nx
import numpy as np

from . import network
from .metrics import MetricsRecord, population_summary
from .qre import SolverOptions, sigmoid, solve_2x2_safe
from .utility import prospect_value

BOX_LO, BOX_HI = -1.0, 2.0
_ANGLES = [2.0 * math.pi * j / 8 for j in range(8)]
_DIRS = [(math.cos(a), math.sin(a)) for a in _ANGLES]


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 200
    periods: int = 200
    replicates: int = 10
    warmup: int = 5
    delta_b: float = 0.0
    delta_g: float = 0.1
    homophily: float = 1.0
    threshold: float = 2.0
    mutation_c: float = 1.0
    mutation_sigma: float = 0.1
    topology: str = "erdos_renyi"
    mean_degree: float = 6.0
    ws_rewire: float = 0.1
    hk_triad: float = 0.5
    normalization: float = 1.0
    mu_lambda: float = 1.0
    sigma_lambda: float = 0.5
    mu_eta: float = 1.4
    sigma_eta: float = 0.5
    mu_omega: float = 2.0
    sigma_omega: float = 0.5
    lambda_shift: float = 0.0
    eta_shift: float = 0.0
    omega_shift: float = 0.0
    choice_radius: float = 0.1
    history: int = 5
    ineq_aversion: float = 1.0
    qre_max_iter: int = 200
    track_clustering: bool = True
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.n_agents < 2:
            problems.append("n_agents must be >= 2")
        if self.periods < 1:
            problems.append("periods must be >= 1")
        if self.replicates < 1:
            problems.append("replicates must be >= 1")
        if not 0 <= self.warmup <= self.periods:
            problems.append("warmup must lie in [0, periods]")
        for name in ("delta_b", "delta_g", "normalization", "ineq_aversion"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        for name in ("homophily", "threshold", "mutation_c", "mutation_sigma",
                     "sigma_lambda", "sigma_eta", "sigma_omega", "choice_radius"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.history < 1:
            problems.append("history must be >= 1")
        if self.topology not in network.TOPOLOGIES:
            problems.append(f"topology must be one of {network.TOPOLOGIES}")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}


@dataclass
class Agents:
    eta: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    U: list
    V: list
    W: list
    WR: list
    history: list

    def __len__(self):
        return len(self.U)


@dataclass
class SimState:
    cfg: SimConfig
    agents: Agents
    graph: nx.Graph
    t: int = 0
    qre_fallbacks: int = 0
    interactions: int = 0
    last_actions: list = field(default_factory=list)


@dataclass
class ReplicateResult:
    replicate: int
    metrics: list[MetricsRecord]
    agents: list[dict]
    qre_fallbacks: int
    interactions: int


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))


def init_population(cfg: SimConfig, rng: np.random.Generator) -> tuple[Agents, nx.Graph]:
    """Draw traits and games, zero wealth, and build the starting graph."""
    n = cfg.n_agents
    eta = rng.lognormal(cfg.mu_eta + cfg.eta_shift, cfg.sigma_eta, n)
    omega = rng.lognormal(cfg.mu_omega + cfg.omega_shift, cfg.sigma_omega, n)
    lam = rng.lognormal(cfg.mu_lambda + cfg.lambda_shift, cfg.sigma_lambda, n)
    U = rng.uniform(BOX_LO, BOX_HI, n)
    V = rng.uniform(BOX_LO, BOX_HI, n)
    agents = Agents(
        eta=eta, lam=lam, omega=omega,
        U=[float(x) for x in U], V=[float(x) for x in V],
        W=[0.0] * n, WR=[0.0] * n,
        history=[deque(maxlen=cfg.history) for _ in range(n)],
    )
    G = network.build_network(cfg.topology, n, cfg.mean_degree, rng, cfg.ws_rewire, cfg.hk_triad)
    return agents, G


def adjust_payoffs(U_self: float, V_self: float, U_other: float, V_other: float,
                   delta_b: float) -> tuple[float, float]:
    """Temporary shift of one's own game toward the pairwise average."""
    return ((1.0 - delta_b) * U_self + delta_b * 0.5 * (U_self + U_other),
            (1.0 - delta_b) * V_self + delta_b * 0.5 * (V_self + V_other))


def learn_probability(u_self: float, u_other: float, lam: float) -> float:
    return sigmoid(lam * (u_other - u_self))


def learn_update(U_self: float, V_self: float, U_other: float, V_other: float,
                 delta_g: float) -> tuple[float, float]:
    return ((1.0 - delta_g) * U_self + delta_g * U_other,
            (1.0 - delta_g) * V_self + delta_g * V_other)


def material_matrix(U: float, V: float, strength: float):
    """Row matrix, optionally pulled toward its mean-subtracted version."""
    s = strength * (1.0 + U + V) / 4.0
    return ((1.0 - s, U - s), (V - s, -s))


def _subjective(m, ref, eta, omega):
    return ((prospect_value(m[0][0], ref, eta, omega), prospect_value(m[0][1], ref, eta, omega)),
            (prospect_value(m[1][0], ref, eta, omega), prospect_value(m[1][1], ref, eta, omega)))


def _clip(x: float) -> float:
    return BOX_LO if x < BOX_LO else BOX_HI if x > BOX_HI else x


def choose_game(U: float, V: float, U_opp: float, V_opp: float, q: float, ref: float,
                eta: float, omega: float, lam: float, cfg: SimConfig,
                rng: np.random.Generator) -> tuple[float, float]:
    """Softmax pick among the current game, eight neighbours at
    ``choice_radius`` and the opponent's game.

    Each candidate is scored by the prospect utility (reference = recent
    wealth) of its expected material payoff when the agent logit-responds to
    the opponent's cooperation probability ``q``.
    """
    r = cfg.choice_radius
    cands = [(U, V)]
    cands.extend((_clip(U + r * dx), _clip(V + r * dy)) for dx, dy in _DIRS)
    cands.append((U_opp, V_opp))
    scores = []
    for cu, cv in cands:
        m = material_matrix(cu, cv, cfg.normalization)
        s = _subjective(m, ref, eta, omega)
        pc = sigmoid(lam * (q * (s[0][0] - s[1][0]) + (1.0 - q) * (s[0][1] - s[1][1])))
        ev = pc * (q * m[0][0] + (1.0 - q) * m[0][1]) + (1.0 - pc) * (q * m[1][0] + (1.0 - q) * m[1][1])
        scores.append(prospect_value(ev, ref, eta, omega))
    top = max(scores)
    weights = [math.exp(lam * (s - top)) for s in scores]
    x = rng.random() * sum(weights)
    acc = 0.0
    for c, w in zip(cands, weights):
        acc += w
        if x < acc:
            return c
    return cands[-1]


def _record_payoff(agents: Agents, i: int, pay: float) -> None:
    w = agents.W[i] + pay
    agents.W[i] = w if w > 0.0 else 0.0
    h = agents.history[i]
    h.append(pay)
    agents.WR[i] = sum(h) / len(h)


def step(state: SimState, rng: np.random.Generator) -> SimState:
    """Advance one period in place and return the state."""
    cfg = state.cfg
    ag = state.agents
    G = state.graph
    n = len(ag)
    adaptive = state.t >= cfg.warmup
    opts = SolverOptions(max_iter=cfg.qre_max_iter)
    nn = cfg.normalization
    order = rng.permutation(n)
    actions = []
    for i in order:
        i = int(i)
        nbrs = G[i]
        if not nbrs:
            continue
        nbr_list = list(nbrs)
        k = nbr_list[int(rng.integers(len(nbr_list)))]

        Ui, Vi, Uk, Vk = ag.U[i], ag.V[i], ag.U[k], ag.V[k]
        if adaptive and cfg.delta_b > 0.0:
            ai_game = adjust_payoffs(Ui, Vi, Uk, Vk, cfg.delta_b)
            ak_game = adjust_payoffs(Uk, Vk, Ui, Vi, cfg.delta_b)
        else:
            ai_game, ak_game = (Ui, Vi), (Uk, Vk)
        mi = material_matrix(*ai_game, nn)
        mk = material_matrix(*ak_game, nn)
        ref_i, ref_k = ag.WR[i], ag.WR[k]
        eta_i, eta_k = float(ag.eta[i]), float(ag.eta[k])
        om_i, om_k = float(ag.omega[i]), float(ag.omega[k])
        lam_i, lam_k = float(ag.lam[i]), float(ag.lam[k])
        sol = solve_2x2_safe(_subjective(mi, ref_i, eta_i, om_i), _subjective(mk, ref_k, eta_k, om_k),
                             lam_i, lam_k, opts)
        state.interactions += 1
        state.qre_fallbacks += sol.fallback

        a_i = 0 if rng.random() < sol.p1c else 1
        a_k = 0 if rng.random() < sol.p2c else 1
        pay_i = mi[a_i][a_k]
        pay_k = mk[a_k][a_i]
        actions.append(a_i == 0)
        actions.append(a_k == 0)
        u_i = prospect_value(pay_i, ref_i, eta_i, om_i)
        u_k = prospect_value(pay_k, ref_k, eta_k, om_k)
        _record_payoff(ag, i, pay_i)
        _record_payoff(ag, k, pay_k)

        if adaptive:
            if rng.random() < learn_probability(u_i, u_k, lam_i):
                ag.U[i], ag.V[i] = learn_update(ag.U[i], ag.V[i], Uk, Vk, cfg.delta_g)
            # the chosen game is adopted at the learning rate, like a copied one
            cu, cv = choose_game(ag.U[i], ag.V[i], Uk, Vk, sol.p2c, ag.WR[i],
                                 eta_i, om_i, lam_i, cfg, rng)
            ag.U[i], ag.V[i] = learn_update(ag.U[i], ag.V[i], cu, cv, cfg.delta_g)

    if adaptive:
        network.rewire(G, order, ag.WR, cfg.homophily, cfg.threshold, rng)
        p_mut = cfg.mutation_c / (n * n)
        if p_mut > 0.0:
            hits = np.nonzero(rng.random(n) < p_mut)[0]
            for i in hits:
                du, dv = rng.normal(0.0, cfg.mutation_sigma, 2)
                ag.U[i] = _clip(ag.U[i] + float(du))
                ag.V[i] = _clip(ag.V[i] + float(dv))
    state.last_actions = actions
    state.t += 1
    return state


def summarize(state: SimState, replicate: int) -> MetricsRecord:
    ag = state.agents
    G = state.graph
    return population_summary(
        period=state.t - 1,
        replicate=replicate,
        U=np.array(ag.U), V=np.array(ag.V),
        wealth=np.array(ag.W), income=np.array(ag.WR),
        lam=ag.lam, eta=ag.eta,
        actions=state.last_actions,
        mean_degree=network.mean_degree(G),
        clustering=nx.average_clustering(G) if state.cfg.track_clustering else float("nan"),
        ineq_aversion=state.cfg.ineq_aversion,
    )


def agent_table(state: SimState) -> list[dict]:
    ag = state.agents
    return [
        {"id": i, "eta": float(ag.eta[i]), "lambda": float(ag.lam[i]), "omega": float(ag.omega[i]),
         "U": ag.U[i], "V": ag.V[i], "W": ag.W[i], "W_R": ag.WR[i], "degree": state.graph.degree(i)}
        for i in range(len(ag))
    ]


def run_replicate(cfg: SimConfig, replicate: int, observer=None) -> ReplicateResult:
    """One seeded run. ``observer(state)``, if given, sees the state after
    every period (used by invariant checks; it must not mutate it)."""
    rng = replicate_rng(cfg.seed, replicate)
    agents, G = init_population(cfg, rng)
    state = SimState(cfg, agents, G)
    records = []
    for _ in range(cfg.periods):
        step(state, rng)
        records.append(summarize(state, replicate))
        if observer is not None:
            observer(state)
    return ReplicateResult(replicate, records, agent_table(state), state.qre_fallbacks, state.interactions)


def _run_one(args):
    cfg, rep = args
    return run_replicate(cfg, rep)


def run_simulation(cfg: SimConfig, workers: int = 1) -> list[ReplicateResult]:
    """All replicates, each seeded from (cfg.seed, replicate index).

    With ``workers > 1`` replicates run in separate processes; the result
    list is always ordered by replicate.
    """
    jobs = [(cfg, r) for r in range(cfg.replicates)]
    if workers > 1 and cfg.replicates > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def with_overrides(cfg: SimConfig, **kw) -> SimConfig:
    return replace(cfg, **kw)
