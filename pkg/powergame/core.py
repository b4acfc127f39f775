"""Environment model, strategy matrices and the support / threat / state functions.

Labels are 1-based everywhere in the public interface. Matrices are numpy object arrays holding
fractions.Fraction, so every comparison below is exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from functools import cached_property
from numbers import Integral, Rational
from typing import Iterable, NamedTuple, Sequence

import networkx as nx
import numpy as np

from powergame.errors import InvalidEnvironment, InvalidStrategy, LabelError

logger = logging.getLogger(__name__)

Pair = tuple[int, int]


def to_rational(value) -> Fraction:
    """Convert int, Fraction, Decimal or a string like "1/3" or "0.25" into an exact Fraction."""
    if isinstance(value, (bool, float, np.floating)):
        raise TypeError(f"refusing inexact value {value!r}, use an int, a Fraction or a string")
    if isinstance(value, Integral):
        return Fraction(int(value))
    if isinstance(value, (Fraction, Decimal, str)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"cannot read {value!r} as a rational")


def unordered(i: int, j: int) -> Pair:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Environment:
    """Countries, their total power and the symmetric friend / adversary relations.

    Pairs are stored as sorted tuples, so {i, j} and {j, i} are the same relation. The relation
    labelling (1..m) and the default adversary labelling (1..q) follow the sorted pair order.
    """

    names: tuple[str, ...]
    power: tuple[Fraction, ...]
    friends: frozenset[Pair]
    adversaries: frozenset[Pair]

    def __post_init__(self):
        problems = _relation_problems(len(self.names), self.friends, self.adversaries)
        if len(self.power) != len(self.names):
            problems.append(f"{len(self.names)} names but {len(self.power)} power values")
        problems += [f"country {i}: negative power {p}" for i, p in enumerate(self.power, 1) if p < 0]
        if problems:
            raise InvalidEnvironment(problems)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.friends) + len(self.adversaries)

    @property
    def q(self) -> int:
        return len(self.adversaries)

    @cached_property
    def relation_pairs(self) -> tuple[Pair, ...]:
        return tuple(sorted(self.friends | self.adversaries))

    @cached_property
    def adversary_pairs(self) -> tuple[Pair, ...]:
        return tuple(sorted(self.adversaries))

    @cached_property
    def relation_labels(self) -> dict[Pair, int]:
        return {pair: k for k, pair in enumerate(self.relation_pairs, 1)}

    @cached_property
    def adversary_labels(self) -> dict[Pair, int]:
        return {pair: k for k, pair in enumerate(self.adversary_pairs, 1)}

    @cached_property
    def p(self) -> np.ndarray:
        return np.array(self.power, dtype=object)

    @cached_property
    def _neighbours(self) -> tuple[dict[int, tuple[int, ...]], dict[int, tuple[int, ...]]]:
        friends = {i: [] for i in self.labels}
        adversaries = {i: [] for i in self.labels}
        for lookup, pairs in ((friends, self.friends), (adversaries, self.adversaries)):
            for i, j in pairs:
                lookup[i].append(j)
                lookup[j].append(i)
        return (
            {i: tuple(sorted(js)) for i, js in friends.items()},
            {i: tuple(sorted(js)) for i, js in adversaries.items()},
        )

    @property
    def labels(self) -> range:
        return range(1, self.n + 1)

    def index(self, i: int) -> int:
        """0-based matrix index of label i."""
        if isinstance(i, bool) or not isinstance(i, Integral) or not 1 <= i <= self.n:
            raise LabelError(f"label {i!r} outside 1..{self.n}")
        return int(i) - 1

    def friends_of(self, i: int) -> tuple[int, ...]:
        self.index(i)
        return self._neighbours[0][i]

    def adversaries_of(self, i: int) -> tuple[int, ...]:
        self.index(i)
        return self._neighbours[1][i]

    def relevant(self, i: int) -> tuple[int, ...]:
        """{i} u F_i u A_i in label order: the coordinates country i cares about."""
        return tuple(sorted((i, *self.friends_of(i), *self.adversaries_of(i))))

    def relation(self, i: int, j: int) -> str | None:
        if i == j:
            return "self"
        if j in self.friends_of(i):
            return "friend"
        if j in self.adversaries_of(i):
            return "adversary"
        return None

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        for i, (name, power) in enumerate(zip(self.names, self.power), 1):
            graph.add_node(i, name=name, power=power)
        graph.add_edges_from(self.friends, relation="friend")
        graph.add_edges_from(self.adversaries, relation="adversary")
        return graph

    def scaled(self, factor) -> Environment:
        factor = to_rational(factor)
        if factor <= 0:
            raise ValueError(f"scaling factor must be positive, got {factor}")
        return Environment(self.names, tuple(p * factor for p in self.power), self.friends, self.adversaries)


def _relation_problems(n: int, friends: Iterable[Pair], adversaries: Iterable[Pair]) -> list[str]:
    problems = []
    friends, adversaries = set(friends), set(adversaries)
    for kind, pairs in (("friend", friends), ("adversary", adversaries)):
        for i, j in sorted(pairs):
            if not (1 <= i <= n and 1 <= j <= n):
                problems.append(f"{kind} pair {{{i},{j}}}: label out of range 1..{n}")
            if i == j:
                problems.append(f"{kind} pair {{{i},{j}}}: self-pair")
    for i, j in sorted(friends & adversaries):
        problems.append(f"pair {{{i},{j}}} in both relation sets")
    return problems


def build_environment(
    names: Sequence[str], p: Sequence, friends: Iterable = (), adversaries: Iterable = ()
) -> Environment:
    """Validate raw lists and build an Environment; every problem found is reported at once."""
    problems = []
    names = tuple(str(name) for name in names)
    power = tuple(to_rational(value) for value in p)

    if not names:
        problems.append("no countries")
    if len(power) != len(names):
        problems.append(f"{len(names)} names but {len(power)} power values")
    problems += [f"country {i}: negative power {value}" for i, value in enumerate(power, 1) if value < 0]

    relation_sets = {}
    for kind, raw_pairs in (("friend", friends), ("adversary", adversaries)):
        seen = set()
        for raw in raw_pairs:
            try:
                i, j = (int(label) for label in raw)
            except (TypeError, ValueError):
                problems.append(f"malformed {kind} pair {raw!r}")
                continue
            pair = unordered(i, j)
            if pair in seen:
                problems.append(f"duplicate {kind} pair {{{pair[0]},{pair[1]}}}")
            seen.add(pair)
        relation_sets[kind] = frozenset(seen)

    problems += _relation_problems(len(names), relation_sets["friend"], relation_sets["adversary"])
    if problems:
        raise InvalidEnvironment(problems)

    env = Environment(names, power, relation_sets["friend"], relation_sets["adversary"])
    logger.debug("built environment n=%d m=%d q=%d", env.n, env.m, env.q)
    return env


class Component(NamedTuple):
    environment: Environment
    labels: tuple[int, ...]


def components(env: Environment) -> list[Component]:
    """Split into connected components of the relation graph, each relabelled 1..n_c.

    `labels[k - 1]` is the original label of the component's country k.
    """
    result = []
    for nodes in sorted(nx.connected_components(env.graph), key=min):
        labels = tuple(sorted(nodes))
        relabel = {old: new for new, old in enumerate(labels, 1)}
        sub = Environment(
            names=tuple(env.names[i - 1] for i in labels),
            power=tuple(env.power[i - 1] for i in labels),
            friends=frozenset(unordered(relabel[i], relabel[j]) for i, j in env.friends if i in relabel),
            adversaries=frozenset(unordered(relabel[i], relabel[j]) for i, j in env.adversaries if i in relabel),
        )
        result.append(Component(sub, labels))
    return result


@dataclass(frozen=True)
class Violation:
    row: int | None
    constraint: str
    detail: str

    def __str__(self):
        where = f"row {self.row}" if self.row is not None else "matrix"
        return f"{where}: {self.constraint}: {self.detail}"


@dataclass(frozen=True, eq=False)
class StrategyMatrix:
    """n x n allocation; u[i, j] (1-based) is country i's power committed toward j, u[i, i] the reserve.

    Only validate_strategy and deviate hand these out, so an instance always satisfies the row-sum,
    support and sign constraints of the environment it was validated against.
    """

    u: np.ndarray

    def __post_init__(self):
        self.u.flags.writeable = False

    def __setstate__(self, state):
        # unpickled arrays come back writeable
        object.__setattr__(self, "__dict__", state)
        self.u.flags.writeable = False

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.u[i - 1, j - 1]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return tuple(self.u[i - 1])

    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(row) for row in self.u)

    def __eq__(self, other):
        if not isinstance(other, StrategyMatrix):
            return NotImplemented
        return self.rows() == other.rows()

    def __hash__(self):
        return hash(self.rows())

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in row) for row in self.rows())
        return f"StrategyMatrix([{body}])"

    def scaled(self, factor) -> StrategyMatrix:
        factor = to_rational(factor)
        return StrategyMatrix(self.u * factor)


def _rational_matrix(u) -> np.ndarray | None:
    if isinstance(u, StrategyMatrix):
        return u.u
    rows = [[to_rational(x) for x in row] for row in u]
    matrix = np.array(rows, dtype=object)
    if matrix.ndim != 2:
        return None
    return matrix


def strategy_violations(env: Environment, u) -> list[Violation]:
    """Every way u fails to be an admissible strategy matrix for env (empty when valid)."""
    matrix = _rational_matrix(u)
    if matrix is None or matrix.shape != (env.n, env.n):
        shape = "ragged" if matrix is None else "x".join(map(str, matrix.shape))
        return [Violation(None, "shape", f"expected {env.n}x{env.n}, got {shape}")]

    violations = []
    for i in env.labels:
        row = matrix[i - 1]
        negative = [j for j in env.labels if row[j - 1] < 0]
        if negative:
            violations.append(Violation(i, "negative", f"negative entries toward {negative}"))

        off_support = [j for j in env.labels if row[j - 1] != 0 and env.relation(i, j) is None]
        if off_support:
            violations.append(Violation(i, "support", f"nonzero entries toward unrelated {off_support}"))

        total = Fraction(row.sum())
        if total != env.power[i - 1]:
            violations.append(Violation(i, "row-sum", f"sums to {total}, expected {env.power[i - 1]}"))
    return violations


def validate_strategy(env: Environment, u) -> StrategyMatrix:
    violations = strategy_violations(env, u)
    if violations:
        raise InvalidStrategy(violations)
    return StrategyMatrix(np.array(_rational_matrix(u), dtype=object))


def deviate(env: Environment, U: StrategyMatrix, i: int, row: Sequence) -> StrategyMatrix:
    """U + e_i d_i: replace country i's row, checking only that row."""
    k = env.index(i)
    row = np.array([to_rational(x) for x in row], dtype=object)
    u = U.u.copy()
    u[k] = row
    violations = [v for v in strategy_violations(env, u) if v.row in (i, None)]
    if violations:
        raise InvalidStrategy(violations)
    return StrategyMatrix(u)


def _check_pair(env: Environment, U: StrategyMatrix):
    if U.n != env.n:
        raise InvalidStrategy([Violation(None, "shape", f"expected {env.n}x{env.n}, got {U.n}x{U.n}")])


def support(env: Environment, U: StrategyMatrix, i: int) -> Fraction:
    """sigma_i(U): reserve + friends' aid toward i + i's own offense against its adversaries."""
    _check_pair(env, U)
    k = env.index(i)
    friends = [j - 1 for j in env.friends_of(i)]
    adversaries = [j - 1 for j in env.adversaries_of(i)]
    return Fraction(U.u[k, k] + U.u[friends, k].sum() + U.u[k, adversaries].sum())


def threat(env: Environment, U: StrategyMatrix, i: int) -> Fraction:
    """tau_i(U): everything i's adversaries commit against i."""
    _check_pair(env, U)
    k = env.index(i)
    adversaries = [j - 1 for j in env.adversaries_of(i)]
    return Fraction(U.u[adversaries, k].sum())


def supports(env: Environment, U: StrategyMatrix) -> tuple[Fraction, ...]:
    return tuple(support(env, U, i) for i in env.labels)


def threats(env: Environment, U: StrategyMatrix) -> tuple[Fraction, ...]:
    return tuple(threat(env, U, i) for i in env.labels)


class State(Enum):
    SAFE = "safe"
    PRECARIOUS = "precarious"
    UNSAFE = "unsafe"

    @classmethod
    def of(cls, sigma: Fraction, tau: Fraction) -> State:
        if sigma > tau:
            return cls.SAFE
        if sigma == tau:
            return cls.PRECARIOUS
        return cls.UNSAFE

    @property
    def survives(self) -> bool:
        return self is not State.UNSAFE


_STATE_ORDER = {state: k for k, state in enumerate(State)}


@dataclass(frozen=True)
class StateVector:
    states: tuple[State, ...]

    def __getitem__(self, i: int) -> State:
        if not 1 <= i <= len(self.states):
            raise LabelError(f"label {i!r} outside 1..{len(self.states)}")
        return self.states[i - 1]

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __str__(self):
        return ",".join(state.value for state in self.states)

    @property
    def sort_key(self) -> tuple[int, ...]:
        return tuple(_STATE_ORDER[state] for state in self.states)

    def differing(self, other: StateVector) -> tuple[int, ...]:
        return tuple(i for i, (a, b) in enumerate(zip(self.states, other.states), 1) if a != b)


def state_vector(env: Environment, U: StrategyMatrix) -> StateVector:
    return StateVector(tuple(State.of(s, t) for s, t in zip(supports(env, U), threats(env, U))))


def state_space_size(env: Environment) -> int:
    return 3**env.n
