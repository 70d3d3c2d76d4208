"""Inequality, welfare and population summaries."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .games import zero_sumness_grid


def gini(values) -> float:
    """Gini coefficient via the sorted-rank formula, O(n log n).

    Equals sum_ij |x_i - x_j| / (2 n^2 mean). All-zero input gives 0.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("gini of an empty vector")
    if np.any(x < 0):
        raise ValueError("gini requires non-negative values")
    total = x.sum()
    if total == 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    g = (2.0 * np.dot(ranks, x) - (n + 1) * total) / (n * total)
    return float(max(g, 0.0))  # roundoff can dip below zero for equal values


def gini_pairwise(values) -> float:
    """Quadratic reference implementation of the same quantity."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if x.sum() == 0:
        return 0.0
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2.0 * n * n * x.mean()))


def sen_welfare(values, alpha: float = 1.0, inequality_of=None) -> float:
    """Mean of ``values`` discounted by (1 - alpha G).

    G is taken over ``inequality_of`` when given (the simulation measures
    inequality on cumulative wealth, which is non-negative), otherwise over
    ``values`` themselves.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("inequality aversion must lie in [0, 1]")
    g = gini(values if inequality_of is None else inequality_of)
    return float(np.mean(values)) * (1.0 - alpha * g)


def trait_correlation(traits, outcomes) -> float:
    """Pearson r, or NaN when either side has zero variance."""
    x = np.asarray(traits, dtype=float)
    y = np.asarray(outcomes, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    den = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if den == 0.0:
        return float("nan")
    return float(np.clip(np.dot(dx, dy) / den, -1.0, 1.0))


@dataclass
class MetricsRecord:
    period: int
    replicate: int
    mean_income: float
    gini: float
    sen_welfare: float
    coop_rate: float
    mean_Z: float
    mean_U: float
    mean_V: float
    mean_degree: float
    clustering: float
    corr_lambda_wealth: float
    corr_eta_wealth: float
    corr_lambda_income: float
    corr_eta_income: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list:
        return [repr(v) if isinstance(v, float) else v for v in asdict(self).values()]


def population_summary(*, period: int, replicate: int, U, V, wealth, income, lam, eta,
                       actions, mean_degree: float = float("nan"),
                       clustering: float = float("nan"), ineq_aversion: float = 1.0) -> MetricsRecord:
    """Assemble one period's record from agent arrays.

    ``actions`` holds the realised actions of the period (True for C);
    an empty sequence reports the cooperation rate as NaN.
    """
    wealth = np.asarray(wealth, dtype=float)
    income = np.asarray(income, dtype=float)
    n_act = len(actions)
    coop = float(np.count_nonzero(actions)) / n_act if n_act else float("nan")
    g = gini(wealth)
    mean_income = float(income.mean())
    return MetricsRecord(
        period=period,
        replicate=replicate,
        mean_income=mean_income,
        gini=g,
        sen_welfare=mean_income * (1.0 - ineq_aversion * g),
        coop_rate=coop,
        mean_Z=float(np.mean(zero_sumness_grid(U, V))),
        mean_U=float(np.mean(U)),
        mean_V=float(np.mean(V)),
        mean_degree=float(mean_degree),
        clustering=float(clustering),
        corr_lambda_wealth=trait_correlation(lam, wealth),
        corr_eta_wealth=trait_correlation(eta, wealth),
        corr_lambda_income=trait_correlation(lam, income),
        corr_eta_income=trait_correlation(eta, income),
    )
