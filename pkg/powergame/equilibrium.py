"""Equilibrium construction, the decomposition check and the unilateral-deviation verifier.

The constructor walks the adversary pairs in the order given by an Ordering, committing the smaller of the two
residual powers symmetrically to each pair and leaving whatever remains as reserve. Its output always satisfies
the decomposition conditions (B d + c = p, d, c >= 0, no adversary pair with two positive reserves). Whether it
is an equilibrium is decided separately by `is_nash`, never assumed.

Deviation analysis is closed form. From country i's point of view every relevant coordinate k has a goodness gap
(sigma_k - tau_k for i and its friends, tau_k - sigma_k for its adversaries, good iff >= 0), and row i enters
each gap through a single term: u_ik for a friend or adversary, p_i minus the friend aid for i itself.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import islice, pairwise, permutations, repeat
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from funcy import log_durations
from tqdm import tqdm

from powergame.core import (
    Environment,
    StateVector,
    StrategyMatrix,
    state_vector,
    support,
    threat,
    to_rational,
    validate_strategy,
)
from powergame.errors import CoordinateAlreadyGood, DimensionMismatch, IrrelevantCoordinate, NotAnEquilibrium
from powergame.preference import GoodnessVector, goodness_from_states

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDERINGS = 720


class DeviationRule(Enum):
    # a deviation counts when it is strictly preferred: self-survival gained, or a gain without a loss
    PROFITABLE = "profitable"
    # a deviation counts when it turns any bad coordinate good, whatever it costs elsewhere
    DOMINANCE = "dominance"


DEFAULT_RULE = DeviationRule.PROFITABLE


@dataclass(frozen=True)
class Ordering:
    """sequence[k - 1] is the adversary label processed at step k."""

    sequence: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.sequence) != list(range(1, len(self.sequence) + 1)):
            raise ValueError(f"ordering {self.sequence} is not a permutation of 1..{len(self.sequence)}")

    @classmethod
    def identity(cls, q: int) -> Ordering:
        return cls(tuple(range(1, q + 1)))

    @classmethod
    def parse(cls, text: str) -> Ordering:
        text = text.strip()
        return cls(tuple(int(label) for label in text.split(",")) if text else ())

    def pairs(self, env: Environment) -> list[tuple[int, int]]:
        if len(self.sequence) != env.q:
            raise DimensionMismatch(f"ordering has {len(self.sequence)} entries for {env.q} adversary pairs")
        return [env.adversary_pairs[label - 1] for label in self.sequence]

    def __str__(self):
        return ",".join(map(str, self.sequence))


@dataclass(frozen=True)
class IncidenceMatrix:
    """n x q, b[i - 1, k - 1] == 1 iff country i is an endpoint of adversary pair k."""

    b: np.ndarray

    def __post_init__(self):
        self.b.flags.writeable = False


def incidence_matrix(env: Environment) -> IncidenceMatrix:
    b = np.zeros((env.n, env.q), dtype=int)
    for k, (i, j) in enumerate(env.adversary_pairs):
        b[[i - 1, j - 1], k] = 1
    return IncidenceMatrix(b)


@dataclass(frozen=True)
class Decomposition:
    """d is indexed by adversary label (the columns of B), c by country."""

    d: tuple[Fraction, ...]
    c: tuple[Fraction, ...]

    @classmethod
    def of(cls, d: Iterable, c: Iterable) -> Decomposition:
        return cls(tuple(map(to_rational, d)), tuple(map(to_rational, c)))


def _check_dimensions(env: Environment, dec: Decomposition):
    if len(dec.d) != env.q or len(dec.c) != env.n:
        expected = f"expected d of length {env.q} and c of length {env.n}"
        raise DimensionMismatch(f"{expected}, got {len(dec.d)} and {len(dec.c)}")


class Construction(NamedTuple):
    strategy: StrategyMatrix
    decomposition: Decomposition


@dataclass(frozen=True)
class DecompositionCheck:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def check_decomposition(env: Environment, dec: Decomposition) -> DecompositionCheck:
    _check_dimensions(env, dec)

    d = np.array(dec.d, dtype=object)
    c = np.array(dec.c, dtype=object)
    committed = incidence_matrix(env).b.astype(object) @ d if env.q else np.zeros(env.n, dtype=int)

    violations = []
    for i, (total, p) in enumerate(zip(committed + c, env.power), 1):
        if total != p:
            violations.append(f"conservation: country {i} gets b_i d + c_i = {total}, expected {p}")
    violations += [f"sign: d[{k}] = {value} is negative" for k, value in enumerate(dec.d, 1) if value < 0]
    violations += [f"sign: c[{i}] = {value} is negative" for i, value in enumerate(dec.c, 1) if value < 0]
    for i, j in env.adversary_pairs:
        if dec.c[i - 1] > 0 and dec.c[j - 1] > 0:
            violations.append(f"complementarity: adversaries {i} and {j} both hold positive reserve")
    return DecompositionCheck(tuple(violations))


def residual_trace(env: Environment, ordering: Ordering) -> Iterator[tuple[Fraction, ...]]:
    """z(0) = p, then z(k) after the k-th adversary pair committed min{z_i, z_j} against each other."""
    z = list(env.power)
    yield tuple(z)
    for i, j in ordering.pairs(env):
        committed = min(z[i - 1], z[j - 1])
        z[i - 1] -= committed
        z[j - 1] -= committed
        yield tuple(z)


@log_durations(logger.debug)
def construct_equilibrium(env: Environment, ordering: Ordering | None = None) -> Construction:
    ordering = ordering if ordering is not None else Ordering.identity(env.q)

    u = np.full((env.n, env.n), Fraction(0), dtype=object)
    d = [Fraction(0)] * env.q

    trace = list(residual_trace(env, ordering))
    for label, (before, after) in zip(ordering.sequence, pairwise(trace)):
        i, j = env.adversary_pairs[label - 1]
        committed = before[i - 1] - after[i - 1]
        d[label - 1] = committed
        u[i - 1, j - 1] = u[j - 1, i - 1] = committed

    reserve = trace[-1]
    u[np.diag_indices(env.n)] = reserve

    decomposition = Decomposition(tuple(d), reserve)
    check = check_decomposition(env, decomposition)
    assert check.ok, check.violations

    return Construction(validate_strategy(env, u), decomposition)


def strategy_from_decomposition(env: Environment, dec: Decomposition) -> StrategyMatrix:
    """Symmetric d_k on adversary pair k, c_i held in reserve, nothing for friends."""
    _check_dimensions(env, dec)
    u = np.full((env.n, env.n), Fraction(0), dtype=object)
    for (i, j), committed in zip(env.adversary_pairs, dec.d):
        u[i - 1, j - 1] = u[j - 1, i - 1] = committed
    u[np.diag_indices(env.n)] = dec.c
    return validate_strategy(env, u)


class FlipMargin(NamedTuple):
    flippable: bool
    margin: Fraction
    # a deviation row for country i realizing the margin, None when nothing works
    row: tuple[Fraction, ...] | None


def _gap(env: Environment, U: StrategyMatrix, i: int, k: int) -> Fraction:
    sigma, tau = support(env, U, k), threat(env, U, k)
    return tau - sigma if env.relation(i, k) == "adversary" else sigma - tau


def _fixed_part(env: Environment, U: StrategyMatrix, i: int, k: int) -> Fraction:
    """The part of coordinate k's gap that row i cannot change."""
    if k == i:
        return _gap(env, U, i, i) - (env.power[i - 1] - sum(U[i, f] for f in env.friends_of(i)))
    return _gap(env, U, i, k) - U[i, k]


def _checked_bad(env: Environment, U: StrategyMatrix, i: int, j: int, goodness: GoodnessVector | None):
    if env.relation(i, j) is None:
        raise IrrelevantCoordinate(f"country {j} is neither {i} nor one of its friends or adversaries")
    good = goodness[j] if goodness is not None else _gap(env, U, i, j) >= 0
    if good:
        raise CoordinateAlreadyGood(f"coordinate {j} is already good for country {i}")


def _row(env: Environment, entries: dict[int, Fraction]) -> tuple[Fraction, ...]:
    row = [Fraction(0)] * env.n
    for k, value in entries.items():
        row[k - 1] = value
    return tuple(row)


def can_flip_coordinate(env: Environment, U: StrategyMatrix, i: int, j: int) -> FlipMargin:
    """Best achievable gap on coordinate j when i rewrites its row to serve j alone.

    j == i: keep everything out of friends; friend or adversary j: put all of p_i on j.
    """
    _checked_bad(env, U, i, j, None)
    p = env.power[i - 1]
    margin = _fixed_part(env, U, i, j) + p
    row = _row(env, {j: p})
    return FlipMargin(margin >= 0, margin, row)


def _improvement(env: Environment, U: StrategyMatrix, i: int, j: int, goodness: GoodnessVector) -> FlipMargin:
    if j == i:
        # self-survival comes first: nothing else needs to be kept
        return can_flip_coordinate(env, U, i, i)

    p = env.power[i - 1]
    required = [*goodness.good, j]
    floors = {k: max(Fraction(0), -_fixed_part(env, U, i, k)) for k in required if k != i}

    slacks = [p - sum(floors.values())]
    if i in required:
        friend_floor = sum(floors[k] for k in env.friends_of(i) if k in floors)
        slacks.append(_fixed_part(env, U, i, i) + p - friend_floor)

    margin = min(slacks)
    if margin < 0:
        return FlipMargin(False, margin, None)
    return FlipMargin(True, margin, _row(env, {**floors, i: p - sum(floors.values())}))


def can_improve_coordinate(env: Environment, U: StrategyMatrix, i: int, j: int) -> FlipMargin:
    """Can i turn bad coordinate j good while keeping every currently good coordinate good?

    Each kept friend or adversary k puts a floor under u_ik, keeping i itself caps i's total friend aid, and the
    reserve absorbs whatever is left. The margin is the smallest remaining slack.
    """
    goodness = goodness_from_states(env, state_vector(env, U), i)
    _checked_bad(env, U, i, j, goodness)
    return _improvement(env, U, i, j, goodness)


@dataclass(frozen=True)
class Witness:
    deviator: int
    coordinate: int
    margin: Fraction
    row: tuple[Fraction, ...]


@dataclass(frozen=True)
class NashReport:
    rule: DeviationRule
    witnesses: tuple[Witness, ...]

    @property
    def is_equilibrium(self) -> bool:
        return not self.witnesses


def is_nash(env: Environment, U: StrategyMatrix, rule: DeviationRule = DEFAULT_RULE) -> NashReport:
    states = state_vector(env, U)
    witnesses = []
    for i in env.labels:
        goodness = goodness_from_states(env, states, i)
        for j in goodness.bad:
            if rule is DeviationRule.DOMINANCE:
                flip = can_flip_coordinate(env, U, i, j)
            else:
                flip = _improvement(env, U, i, j, goodness)
            if flip.flippable:
                witnesses.append(Witness(i, j, flip.margin, flip.row))
    return NashReport(rule, tuple(witnesses))


@dataclass(frozen=True)
class EquilibriumRecord:
    ordering: Ordering
    strategy: StrategyMatrix
    states: StateVector
    decomposition: Decomposition


@dataclass(frozen=True)
class Enumeration:
    equilibria: tuple[EquilibriumRecord, ...]
    total_orderings: int
    orderings_tried: int
    distinct_constructed: int
    # orderings whose constructed matrix the verifier refuted
    refuted: tuple[Ordering, ...]

    @property
    def truncated(self) -> bool:
        return self.orderings_tried < self.total_orderings


def _construct_and_verify(env: Environment, sequence: tuple[int, ...], rule: DeviationRule):
    ordering = Ordering(sequence)
    construction = construct_equilibrium(env, ordering)
    return ordering, construction, is_nash(env, construction.strategy, rule).is_equilibrium


@log_durations(logger.debug)
def enumerate_equilibria(
    env: Environment, max_orderings: int = DEFAULT_MAX_ORDERINGS, rule: DeviationRule = DEFAULT_RULE, jobs: int = 1
) -> Enumeration:
    """Construct one matrix per ordering (lexicographic permutation order), keep the verified, distinct ones."""
    if max_orderings < 1:
        raise ValueError(f"max_orderings must be at least 1, got {max_orderings}")

    total = math.factorial(env.q)
    tried = min(total, max_orderings)
    if tried < total:
        logger.warning("trying %d of %d orderings", tried, total)

    sequences = list(islice(permutations(range(1, env.q + 1)), tried))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_construct_and_verify, repeat(env), sequences, repeat(rule), chunksize=16))
    else:
        results = map(_construct_and_verify, repeat(env), sequences, repeat(rule))

    seen = set()
    equilibria, refuted = [], []
    for ordering, (strategy, decomposition), verified in tqdm(results, total=tried, desc="orderings", disable=None):
        if not verified:
            refuted.append(ordering)
        if strategy in seen:
            continue
        seen.add(strategy)
        if verified:
            equilibria.append(EquilibriumRecord(ordering, strategy, state_vector(env, strategy), decomposition))

    if refuted:
        logger.warning("%d of %d constructed matrices refuted under the %s rule", len(refuted), tried, rule.value)

    return Enumeration(tuple(equilibria), total, tried, len(seen), tuple(refuted))


def equivalence_classes(
    env: Environment, equilibria: Iterable[StrategyMatrix], rule: DeviationRule = DEFAULT_RULE
) -> dict[StateVector, tuple[StrategyMatrix, ...]]:
    """Group equilibria by their state vector; classes come out in state order."""
    classes: dict[StateVector, list[StrategyMatrix]] = {}
    for U in dict.fromkeys(equilibria):
        report = is_nash(env, U, rule)
        if not report.is_equilibrium:
            raise NotAnEquilibrium(f"{U!r} is refuted by {len(report.witnesses)} deviation(s)")
        classes.setdefault(state_vector(env, U), []).append(U)
    return {states: tuple(classes[states]) for states in sorted(classes, key=lambda x: x.sort_key)}
