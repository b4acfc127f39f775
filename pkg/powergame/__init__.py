"""Exact-rational engine for networked power allocation games between countries."""

from powergame.core import (
    Environment,
    State,
    StateVector,
    StrategyMatrix,
    build_environment,
    state_vector,
    support,
    threat,
    validate_strategy,
)
from powergame.equilibrium import DeviationRule, Ordering, construct_equilibrium, enumerate_equilibria, is_nash
from powergame.errors import PowerGameError

__version__ = "0.1.0"
