"""Evolution of game norms on the UV plane of symmetric 2x2 games.

Mean-field fitness landscapes under bounded rationality and risk attitudes,
an agent-based model on adaptive networks, and variance-based sensitivity
analysis of its outputs.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegeneratePayoffs,
    DegenerateUtility,
    GameNormsError,
    InvalidTopologyParams,
    NoConvergence,
    NumericalBudgetExceeded,
)
from .games import Game, GameClass, classify, zero_sumness  # noqa: E402
from .utility import UtilityModel  # noqa: E402

__all__ = [
    "ConfigError", "DegeneratePayoffs", "DegenerateUtility", "GameNormsError",
    "InvalidTopologyParams", "NoConvergence", "NumericalBudgetExceeded",
    "Game", "GameClass", "classify", "zero_sumness", "UtilityModel", "__version__",
]
