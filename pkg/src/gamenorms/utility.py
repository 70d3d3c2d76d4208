"""Subjective valuation of material payoffs.

Three variants are supported: risk neutral (identity), linex
``-exp(-eta c) + eta c + 1`` and a reference-dependent prospect form with
curvatures tied to ``eta`` and a loss-aversion multiplier ``omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

RISK_NEUTRAL = "risk_neutral"
LINEX = "linex"
PROSPECT = "prospect"
KINDS = (RISK_NEUTRAL, LINEX, PROSPECT)


def gain_curvature(eta: float) -> float:
    return max(0.2, 1.0 / (1.0 + eta))


def loss_curvature(eta: float) -> float:
    return max(0.2, 1.0 / (1.0 + 0.5 * eta))


def prospect_value(c: float, reference: float, eta: float, omega: float) -> float:
    """Scalar prospect utility. Kept free of numpy for the ABM hot loop."""
    d = c - reference
    if d >= 0.0:
        return d ** gain_curvature(eta)
    return -omega * (-d) ** loss_curvature(eta)


def linex_value(c: float, eta: float) -> float:
    return -math.exp(-eta * c) + eta * c + 1.0


@dataclass(frozen=True)
class UtilityModel:
    kind: str = RISK_NEUTRAL
    eta: float = 1.4
    omega: float = 2.0
    reference: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown utility kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == LINEX and not self.eta > 0:
            raise ValueError("linex utility needs eta > 0")
        if self.kind == PROSPECT:
            if self.eta < 0:
                raise ValueError("prospect utility needs eta >= 0")
            if not self.omega > 0:
                raise ValueError("prospect utility needs omega > 0")

    @classmethod
    def risk_neutral(cls) -> "UtilityModel":
        return cls(RISK_NEUTRAL)

    @classmethod
    def linex(cls, eta: float) -> "UtilityModel":
        return cls(LINEX, eta=eta)

    @classmethod
    def prospect(cls, eta: float, omega: float = 2.0, reference: float = 0.0) -> "UtilityModel":
        return cls(PROSPECT, eta=eta, omega=omega, reference=reference)

    def with_eta(self, eta: float) -> "UtilityModel":
        """Same family at a different risk sensitivity (no-op for risk neutral)."""
        if self.kind == RISK_NEUTRAL:
            return self
        return replace(self, eta=float(eta))

    def __call__(self, c):
        return evaluate(self, c)

    def to_dict(self) -> dict:
        return {"type": self.kind, "eta": self.eta, "omega": self.omega, "reference": self.reference}

    @classmethod
    def from_dict(cls, d: dict) -> "UtilityModel":
        allowed = {"type", "eta", "omega", "reference"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown utility fields: {sorted(unknown)}")
        return cls(
            kind=d.get("type", RISK_NEUTRAL),
            eta=float(d.get("eta", 1.4)),
            omega=float(d.get("omega", 2.0)),
            reference=float(d.get("reference", 0.0)),
        )


def evaluate(u: UtilityModel, c, eta=None):
    """Utility of payoff(s) ``c``. Works on scalars and arrays.

    ``eta`` may be an array broadcastable against ``c``; it overrides the
    model's own value, which lets the quadrature evaluate many risk
    sensitivities in one call.
    """
    eta = u.eta if eta is None else eta
    scalar = np.ndim(c) == 0 and np.ndim(eta) == 0
    c = np.asarray(c, dtype=float)
    if u.kind == RISK_NEUTRAL:
        out = c.copy()
    elif u.kind == LINEX:
        out = -np.exp(-eta * c) + eta * c + 1.0
    else:
        eta = np.asarray(eta, dtype=float)
        a = np.maximum(0.2, 1.0 / (1.0 + eta))
        b = np.maximum(0.2, 1.0 / (1.0 + 0.5 * eta))
        d = c - u.reference
        gain = np.abs(d) ** a
        loss = -u.omega * np.abs(d) ** b
        out = np.where(d >= 0.0, gain, loss)
    return float(out) if scalar else out


def apply_to_matrix(u: UtilityModel, m):
    """Entrywise utility of a payoff matrix (or a stack of them)."""
    return evaluate(u, np.asarray(m, dtype=float))
