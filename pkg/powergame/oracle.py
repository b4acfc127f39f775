"""Brute-force cross-check of the closed-form verifier on a discretized deviation set.

Every country's candidate rows are the weak compositions of p_i / resolution over {i} u F_i u A_i, walked in
descending lexicographic order of the relevant coordinates, so the all-in row on the lowest label comes first
and the first witness found is reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterator

from funcy import log_durations
from tqdm import tqdm

from powergame.core import (
    Environment,
    StateVector,
    StrategyMatrix,
    deviate,
    state_space_size,
    state_vector,
    to_rational,
    validate_strategy,
)
from powergame.equilibrium import DEFAULT_RULE, DeviationRule, NashReport, is_nash
from powergame.errors import GridError, GridTooLarge
from powergame.preference import goodness_from_states, goodness_vector, improves

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class GridSpec:
    resolution: Fraction
    # most rows (or, for reachable_states, whole matrices) a single enumeration may produce
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "resolution", to_rational(self.resolution))
        if self.resolution <= 0:
            raise GridError(f"resolution must be positive, got {self.resolution}")
        if self.cap < 1:
            raise GridError(f"cap must be at least 1, got {self.cap}")

    def steps(self, amount: Fraction) -> int:
        units = amount / self.resolution
        if units.denominator != 1:
            raise GridError(f"{amount} is not a multiple of the resolution {self.resolution}")
        return int(units)


def grid_row_count(total: int, parts: int) -> int:
    """Weak compositions of total into parts: C(total + parts - 1, parts - 1)."""
    if parts == 0:
        return int(total == 0)
    return math.comb(total + parts - 1, parts - 1)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _sized(env: Environment, i: int, grid: GridSpec) -> tuple[int, int]:
    units = grid.steps(env.power[i - 1])
    count = grid_row_count(units, len(env.relevant(i)))
    if count > grid.cap:
        raise GridTooLarge(f"country {i}", count, grid.cap)
    return units, count


def enumerate_grid_deviations(env: Environment, i: int, grid: GridSpec) -> Iterator[tuple[Fraction, ...]]:
    env.index(i)
    units, _ = _sized(env, i, grid)
    relevant = env.relevant(i)
    for composition in _compositions(units, len(relevant)):
        row = [Fraction(0)] * env.n
        for k, steps in zip(relevant, composition):
            row[k - 1] = steps * grid.resolution
        yield tuple(row)


@dataclass(frozen=True)
class SearchWitness:
    deviator: int
    row: tuple[Fraction, ...]
    # the coordinate the deviation turns good (i itself when self-survival is gained)
    coordinate: int


@log_durations(logger.debug)
def refute_by_search(
    env: Environment, U: StrategyMatrix, grid: GridSpec, rule: DeviationRule = DEFAULT_RULE
) -> SearchWitness | None:
    for i in env.labels:
        _sized(env, i, grid)

    states = state_vector(env, U)
    for i in tqdm(env.labels, desc="deviators", disable=None):
        before = goodness_from_states(env, states, i)
        if not before.bad:
            continue
        for row in enumerate_grid_deviations(env, i, grid):
            after = goodness_vector(env, deviate(env, U, i, row), i)
            gained = before.gains(after)
            if not gained:
                continue
            if rule is DeviationRule.DOMINANCE:
                return SearchWitness(i, row, gained[0])
            if improves(before, after):
                return SearchWitness(i, row, i if i in gained else gained[0])
    return None


class Verdict(Enum):
    AGREE_EQUILIBRIUM = "agree-equilibrium"
    AGREE_REFUTED = "agree-refuted"
    GRID_TOO_COARSE = "grid-too-coarse"
    HARD_DISAGREEMENT = "hard-disagreement"


@dataclass(frozen=True)
class CrossValidation:
    verdict: Verdict
    report: NashReport
    witness: SearchWitness | None

    @property
    def margin(self) -> Fraction | None:
        """Closed-form margin of the first witness, the off-grid slack behind a grid-too-coarse verdict."""
        return self.report.witnesses[0].margin if self.report.witnesses else None

    @property
    def agrees(self) -> bool:
        return self.verdict in (Verdict.AGREE_EQUILIBRIUM, Verdict.AGREE_REFUTED)


def cross_validate(
    env: Environment, U: StrategyMatrix, grid: GridSpec, rule: DeviationRule = DEFAULT_RULE
) -> CrossValidation:
    report = is_nash(env, U, rule)
    witness = refute_by_search(env, U, grid, rule)

    match report.is_equilibrium, witness is None:
        case True, True:
            verdict = Verdict.AGREE_EQUILIBRIUM
        case False, False:
            verdict = Verdict.AGREE_REFUTED
        case False, True:
            verdict = Verdict.GRID_TOO_COARSE
            first = report.witnesses[0]
            logger.warning(
                "closed form refutes (country %d, coordinate %d, margin %s) but no deviation on the %s grid does",
                first.deviator,
                first.coordinate,
                first.margin,
                grid.resolution,
            )
        case _:
            verdict = Verdict.HARD_DISAGREEMENT
            logger.error("search refutes %r by %s, closed form reports equilibrium", U, witness)

    return CrossValidation(verdict, report, witness)


@log_durations(logger.debug)
def reachable_states(env: Environment, grid: GridSpec) -> tuple[StateVector, ...]:
    """Every state vector some grid strategy matrix realizes, in state order."""
    counts = [_sized(env, i, grid)[1] for i in env.labels]
    total = math.prod(counts)
    if total > grid.cap:
        raise GridTooLarge("strategy space", total, grid.cap)

    rows = [list(enumerate_grid_deviations(env, i, grid)) for i in env.labels]
    seen = set()
    for u in tqdm(product(*rows), total=total, desc="matrices", disable=None):
        seen.add(state_vector(env, validate_strategy(env, u)))
    logger.info("%d of %d state vectors reachable", len(seen), state_space_size(env))
    return tuple(sorted(seen, key=lambda x: x.sort_key))
