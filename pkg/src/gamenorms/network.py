"""Interaction graphs and income-homophily rewiring."""

from __future__ import annotations

import math

import networkx as nx
import numpy as np

from .errors import InvalidTopologyParams

TOPOLOGIES = ("erdos_renyi", "watts_strogatz", "holme_kim")


def build_network(topology: str, n: int, mean_degree: float, rng: np.random.Generator,
                  ws_rewire: float = 0.1, hk_triad: float = 0.5) -> nx.Graph:
    """Undirected simple graph on nodes 0..n-1 with roughly ``mean_degree``."""
    if topology not in TOPOLOGIES:
        raise InvalidTopologyParams(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    if n < 2:
        raise InvalidTopologyParams("need at least two nodes")
    if not 0 < mean_degree:
        raise InvalidTopologyParams("mean degree must be positive")
    if not (0.0 <= ws_rewire <= 1.0 and 0.0 <= hk_triad <= 1.0):
        raise InvalidTopologyParams("rewiring/triad probabilities must lie in [0, 1]")
    k = min(mean_degree, n - 1)
    seed = int(rng.integers(2**32))
    if topology == "erdos_renyi":
        G = nx.gnp_random_graph(n, min(1.0, k / (n - 1)), seed=seed)
    elif topology == "watts_strogatz":
        k_ws = max(2, 2 * int(round(k / 2)))
        G = nx.complete_graph(n) if k_ws >= n else nx.watts_strogatz_graph(n, k_ws, ws_rewire, seed=seed)
    else:
        m = max(1, min(int(round(k / 2)), n - 1))
        G = nx.complete_graph(n) if m >= n - 1 else nx.powerlaw_cluster_graph(n, m, hk_triad, seed=seed)
    # a plain Graph with int labels in a fixed order keeps iteration deterministic
    out = nx.Graph()
    out.add_nodes_from(range(n))
    out.add_edges_from(sorted(tuple(sorted(e)) for e in G.edges()))
    return out


def connect_probability(wr_i: float, wr_k: float, alpha: float, rho: float) -> float:
    """Logistic attachment in the recent-wealth gap."""
    x = alpha * (abs(wr_i - wr_k) - rho)
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def is_simple(G: nx.Graph) -> bool:
    return nx.number_of_selfloops(G) == 0 and not G.is_multigraph()


def _second_order(G: nx.Graph, i: int) -> list[int]:
    nbrs = G[i]
    cands = set()
    for k in nbrs:
        cands.update(G[k])
    cands.discard(i)
    cands.difference_update(nbrs)
    return sorted(cands)


def _random_non_edge(G: nx.Graph, rng: np.random.Generator, n: int, tries: int = 1000):
    for _ in range(tries):
        a, b = (int(x) for x in rng.integers(n, size=2))
        if a != b and not G.has_edge(a, b):
            return a, b
    return None


def rewire(G: nx.Graph, order, recent_wealth, alpha: float, rho: float,
           rng: np.random.Generator) -> tuple[int, int]:
    """One homophily pass over agents in ``order``.

    Each agent weighs cutting one random existing tie (probability
    1 - P_con) and adding one tie to a random second-order neighbour
    (probability P_con); with no second-order candidates any non-neighbour
    is considered. Afterwards random additions or removals elsewhere cancel
    the net change so the edge count, and with it the mean degree, is
    unchanged. Returns (cuts, adds) before compensation.
    """
    n = G.number_of_nodes()
    cuts = adds = 0
    for i in order:
        i = int(i)
        nbrs = list(G[i])
        if nbrs:
            k = nbrs[int(rng.integers(len(nbrs)))]
            if rng.random() < 1.0 - connect_probability(recent_wealth[i], recent_wealth[k], alpha, rho):
                G.remove_edge(i, k)
                cuts += 1
        cands = _second_order(G, i)
        if cands:
            j = cands[int(rng.integers(len(cands)))]
        else:
            non = [j for j in range(n) if j != i and not G.has_edge(i, j)]
            if not non:
                continue
            j = non[int(rng.integers(len(non)))]
        if rng.random() < connect_probability(recent_wealth[i], recent_wealth[j], alpha, rho):
            G.add_edge(i, j)
            adds += 1
    net = adds - cuts
    if net < 0:
        for _ in range(-net):
            pair = _random_non_edge(G, rng, n)
            if pair is None:
                break
            G.add_edge(*pair)
    elif net > 0:
        edges = sorted(tuple(sorted(e)) for e in G.edges())
        picks = rng.choice(len(edges), size=min(net, len(edges)), replace=False)
        G.remove_edges_from(edges[int(p)] for p in picks)
    return cuts, adds


def mean_degree(G: nx.Graph) -> float:
    n = G.number_of_nodes()
    return 2.0 * G.number_of_edges() / n if n else 0.0
