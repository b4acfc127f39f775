"""Country-level preferences between strategy matrices.

Each axiom clause reads as a binary "good for i" test on one coordinate: survival (safe or precarious) is
good for i itself and for its friends, non-safety (unsafe or precarious) is good for its adversaries.
`U <= V` for country i then means V is at least as good as U on every coordinate i cares about.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from powergame.core import Environment, State, StateVector, StrategyMatrix, state_vector
from powergame.errors import IrrelevantCoordinate

logger = logging.getLogger(__name__)


class Comparison(Enum):
    V_WEAKLY_PREFERRED = "V-weakly-preferred"
    U_WEAKLY_PREFERRED = "U-weakly-preferred"
    INDIFFERENT = "indifferent"
    INCOMPARABLE = "incomparable"
    NOT_ADMISSIBLE = "not-admissible"


def is_good(env: Environment, i: int, j: int, state: State) -> bool:
    match env.relation(i, j):
        case "self" | "friend":
            return state.survives
        case "adversary":
            return state is not State.SAFE
        case _:
            raise IrrelevantCoordinate(f"country {j} is neither {i} nor one of its friends or adversaries")


@dataclass(frozen=True)
class GoodnessVector:
    evaluator: int
    entries: tuple[tuple[int, bool], ...]

    def __getitem__(self, j: int) -> bool:
        for label, good in self.entries:
            if label == j:
                return good
        raise IrrelevantCoordinate(f"country {j} is not relevant to country {self.evaluator}")

    def as_dict(self) -> dict[int, bool]:
        return dict(self.entries)

    @property
    def good(self) -> tuple[int, ...]:
        return tuple(j for j, good in self.entries if good)

    @property
    def bad(self) -> tuple[int, ...]:
        return tuple(j for j, good in self.entries if not good)

    def gains(self, after: GoodnessVector) -> tuple[int, ...]:
        """Coordinates bad here and good in `after`."""
        return tuple(j for (j, was), (_, now) in zip(self.entries, after.entries) if now and not was)

    def losses(self, after: GoodnessVector) -> tuple[int, ...]:
        return after.gains(self)

    def dominated_by(self, other: GoodnessVector) -> bool:
        return not self.losses(other)


def goodness_from_states(env: Environment, states: StateVector, i: int) -> GoodnessVector:
    return GoodnessVector(i, tuple((j, is_good(env, i, j, states[j])) for j in env.relevant(i)))


def goodness_vector(env: Environment, U: StrategyMatrix, i: int) -> GoodnessVector:
    return goodness_from_states(env, state_vector(env, U), i)


def weakly_preferred(env: Environment, i: int, U: StrategyMatrix, V: StrategyMatrix) -> bool:
    """U <= V for country i: V is at least as good as U on every relevant coordinate (Axiom 2)."""
    return goodness_vector(env, U, i).dominated_by(goodness_vector(env, V, i))


def strictly_self_preferred(env: Environment, i: int, U: StrategyMatrix, V: StrategyMatrix) -> bool:
    """Axiom 3: V gives i the survival that U denies it."""
    return state_vector(env, V)[i].survives and state_vector(env, U)[i] is State.UNSAFE


def improves(before: GoodnessVector, after: GoodnessVector) -> bool:
    """Strict preference of `after` over `before`: self-survival gained, or a gain with no loss."""
    gained = before.gains(after)
    return before.evaluator in gained or (bool(gained) and not before.losses(after))


def strictly_preferred(env: Environment, i: int, U: StrategyMatrix, V: StrategyMatrix) -> bool:
    return improves(goodness_vector(env, U, i), goodness_vector(env, V, i))


def axiom2_compare(env: Environment, i: int, U: StrategyMatrix, V: StrategyMatrix) -> Comparison:
    before, after = goodness_vector(env, U, i), goodness_vector(env, V, i)
    forward, backward = before.dominated_by(after), after.dominated_by(before)
    if forward and backward:
        return Comparison.INDIFFERENT
    if forward:
        return Comparison.V_WEAKLY_PREFERRED
    if backward:
        return Comparison.U_WEAKLY_PREFERRED
    return Comparison.INCOMPARABLE


def is_admissible_alternative(env: Environment, U: StrategyMatrix, V: StrategyMatrix) -> bool:
    return len(state_vector(env, U).differing(state_vector(env, V))) <= 1


def axiom1_compare(env: Environment, i: int, U: StrategyMatrix, V: StrategyMatrix) -> Comparison:
    x_u, x_v = state_vector(env, U), state_vector(env, V)
    differing = x_u.differing(x_v)
    if len(differing) > 1:
        return Comparison.NOT_ADMISSIBLE
    if not differing:
        return Comparison.INDIFFERENT

    (j,) = differing
    if env.relation(i, j) is None:
        return Comparison.INDIFFERENT

    good_u, good_v = is_good(env, i, j, x_u[j]), is_good(env, i, j, x_v[j])
    if good_u == good_v:
        return Comparison.INDIFFERENT
    return Comparison.V_WEAKLY_PREFERRED if good_v else Comparison.U_WEAKLY_PREFERRED
