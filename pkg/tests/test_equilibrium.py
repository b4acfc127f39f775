from fractions import Fraction
import time
from itertools import combinations

import numpy as np
import pytest
from conftest import environments, powers, run_expect, scenario, strategy, strategy_matrices
from hypothesis import given
from hypothesis import strategies as st

from powergame.core import State, build_environment, deviate, state_vector, validate_strategy
from powergame.equilibrium import (
    Decomposition,
    DeviationRule,
    Ordering,
    Witness,
    can_flip_coordinate,
    can_improve_coordinate,
    check_decomposition,
    construct_equilibrium,
    enumerate_equilibria,
    equivalence_classes,
    incidence_matrix,
    is_nash,
    residual_trace,
    strategy_from_decomposition,
)
from powergame.errors import CoordinateAlreadyGood, DimensionMismatch, IrrelevantCoordinate, NotAnEquilibrium
from powergame.preference import goodness_vector, improves

RULES = list(DeviationRule)


def test_incidence_matrices(e2, e3):
    assert incidence_matrix(e2).b.tolist() == [[1], [1]]
    assert incidence_matrix(e3).b.tolist() == [[1, 1, 0], [1, 0, 1], [0, 1, 1]]


def test_construct_e2(e2):
    U, dec = construct_equilibrium(e2)
    assert dec == Decomposition.of([1], [1, 0])
    assert U.rows() == ((1, 1), (1, 0))
    assert str(state_vector(e2, U)) == "safe,precarious"
    assert is_nash(e2, U).is_equilibrium


def test_construct_e3(e3):
    U, dec = construct_equilibrium(e3, Ordering.identity(3))
    assert dec == Decomposition.of([1, 0, 0], [0, 0, 1])
    assert str(state_vector(e3, U)) == "precarious,precarious,safe"


def test_construct_e4(e4):
    U, dec = construct_equilibrium(e4)
    assert U == strategy(e4, "e4_equilibrium")
    assert dec == Decomposition.of([1], [1, 0, 2])


def test_d_is_indexed_by_adversary_label(e3):
    _, dec = construct_equilibrium(e3, Ordering.parse("3,1,2"))
    assert dec.d == (0, 0, 1)
    assert dec.c == (1, 0, 0)


def test_residual_trace(e2, e3):
    assert list(residual_trace(e2, Ordering.identity(1))) == [(2, 1), (1, 0)]
    assert list(residual_trace(e3, Ordering.parse("2,1,3"))) == [(1, 1, 1), (0, 1, 0), (0, 1, 0), (0, 1, 0)]


@pytest.mark.parametrize(
    "d, c, prefix",
    [
        ([0], [2, 1], "complementarity"),
        ([2], [0, -1], "sign"),
        ([1], [0, 0], "conservation"),
    ],
)
def test_decomposition_violations(e2, d, c, prefix):
    check = check_decomposition(e2, Decomposition.of(d, c))
    assert not check
    assert all(violation.startswith(prefix) for violation in check.violations)


def test_decomposition_of_wrong_length(e2):
    assert check_decomposition(e2, Decomposition.of([1], [1, 0]))
    with pytest.raises(DimensionMismatch):
        check_decomposition(e2, Decomposition.of([1, 0], [1, 0]))


def test_strategy_from_decomposition(e2, e3):
    assert strategy_from_decomposition(e2, Decomposition.of([1], [1, 0])) == construct_equilibrium(e2).strategy
    U = strategy_from_decomposition(e3, Decomposition.of([0, 0, 1], [1, 0, 0]))
    assert U.rows() == ((1, 0, 0), (0, 0, 1), (0, 1, 0))


def test_orderings(e3):
    assert str(Ordering.parse("2,1,3")) == "2,1,3"
    with pytest.raises(ValueError):
        Ordering.parse("1,1,3")
    with pytest.raises(DimensionMismatch):
        construct_equilibrium(e3, Ordering.parse("2,1"))


def test_flip_margins(e2, e4):
    all_reserve = strategy(e2, "e2_all_reserve")
    flip = can_flip_coordinate(e2, all_reserve, 1, 2)
    assert flip.flippable and flip.margin == 1
    assert flip.row == (0, 2)
    assert can_flip_coordinate(e2, all_reserve, 2, 1).margin == -1

    flip = can_flip_coordinate(e4, strategy(e4, "e4_equilibrium"), 2, 3)
    assert not flip.flippable and flip.margin == -2


def test_flip_preconditions(e2, e4):
    with pytest.raises(CoordinateAlreadyGood):
        can_flip_coordinate(e2, strategy(e2, "e2_all_reserve"), 1, 1)
    with pytest.raises(IrrelevantCoordinate):
        can_improve_coordinate(e4, strategy(e4, "e4_equilibrium"), 1, 3)


def test_improve_keeps_good_coordinates(e2):
    flip = can_improve_coordinate(e2, strategy(e2, "e2_all_reserve"), 1, 2)
    assert flip.flippable and flip.margin == 1
    assert flip.row == (1, 1)


def test_goldens():
    run_expect("e2", "e2_equilibrium", "safe,precarious", True)
    run_expect("e4", "e4_equilibrium", "safe,precarious,safe", True)
    report = run_expect("e2", "e2_all_reserve", "safe,safe", False)
    assert report.witnesses == (Witness(1, 2, Fraction(1), (1, 1)),)


@pytest.mark.parametrize("rule", RULES)
def test_all_reserve_has_one_witness(e2, rule):
    (witness,) = is_nash(e2, strategy(e2, "e2_all_reserve"), rule).witnesses
    assert (witness.deviator, witness.coordinate, witness.margin) == (1, 2, 1)


def test_triangle_depends_on_rule(e3):
    U, _ = construct_equilibrium(e3)
    assert is_nash(e3, U, DeviationRule.PROFITABLE).is_equilibrium
    # country 1 can make 3 precarious by giving up its hold on 2
    report = is_nash(e3, U, DeviationRule.DOMINANCE)
    assert [(w.deviator, w.coordinate, w.margin) for w in report.witnesses] == [(1, 3, 0), (2, 3, 0)]


@pytest.mark.parametrize("rule", RULES)
def test_constructed_matrix_can_be_refuted(rule):
    env = scenario("star121")
    U, dec = construct_equilibrium(env)
    assert U == strategy(env, "star121")
    assert check_decomposition(env, dec)
    report = is_nash(env, U, rule)
    assert [(w.deviator, w.coordinate, w.margin) for w in report.witnesses] == [(1, 3, 0)]


def test_enumerate_triangle(e3):
    enumeration = enumerate_equilibria(e3)
    assert (enumeration.total_orderings, enumeration.orderings_tried) == (6, 6)
    assert enumeration.distinct_constructed == 3
    assert not enumeration.refuted and not enumeration.truncated
    assert [str(record.ordering) for record in enumeration.equilibria] == ["1,2,3", "2,1,3", "3,1,2"]

    classes = equivalence_classes(e3, (record.strategy for record in enumeration.equilibria))
    assert [str(states) for states in classes] == [
        "safe,precarious,precarious",
        "precarious,safe,precarious",
        "precarious,precarious,safe",
    ]
    assert all(len(members) == 1 for members in classes.values())


def test_enumerate_under_dominance(e3):
    enumeration = enumerate_equilibria(e3, rule=DeviationRule.DOMINANCE)
    assert not enumeration.equilibria
    assert len(enumeration.refuted) == 6


def test_enumerate_truncated(e2, e3):
    assert len(enumerate_equilibria(e2).equilibria) == 1
    enumeration = enumerate_equilibria(e3, max_orderings=2)
    assert enumeration.truncated
    assert enumeration.distinct_constructed == 1


def test_enumerate_in_parallel(e3):
    assert enumerate_equilibria(e3, jobs=2) == enumerate_equilibria(e3)


def test_classes_reject_refuted(e2):
    with pytest.raises(NotAnEquilibrium):
        equivalence_classes(e2, [strategy(e2, "e2_all_reserve")])


@given(environments(max_n=7))
def test_construction_always_decomposes(env):
    U, dec = construct_equilibrium(env)
    assert check_decomposition(env, dec)
    assert strategy_from_decomposition(env, dec) == U


@given(environments(max_n=7), st.sampled_from(RULES))
def test_refutations_of_constructed_matrices(env, rule):
    """Only an exhausted country can deviate, and only against an adversary still holding reserve."""
    U, dec = construct_equilibrium(env)
    for witness in is_nash(env, U, rule).witnesses:
        assert dec.c[witness.deviator - 1] == 0
        assert env.relation(witness.deviator, witness.coordinate) == "adversary"
        assert dec.c[witness.coordinate - 1] > 0


@st.composite
def matchings(draw):
    n = draw(st.integers(min_value=2, max_value=8))
    labels = draw(st.permutations(range(1, n + 1)))
    pairs = list(zip(labels[::2], labels[1::2]))
    adversaries = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    p = draw(st.lists(st.integers(min_value=0, max_value=4), min_size=n, max_size=n))
    taken = {(min(a, b), max(a, b)) for a, b in adversaries}
    friends = [pair for pair in combinations(range(1, n + 1), 2) if pair not in taken and draw(st.booleans())]
    return build_environment([f"C{i}" for i in range(1, n + 1)], p, friends, adversaries)


@given(matchings(), st.sampled_from(RULES))
def test_matchings_always_verify(env, rule):
    U, _ = construct_equilibrium(env)
    assert is_nash(env, U, rule).is_equilibrium


@given(st.data())
def test_witnesses_replay(data):
    env = data.draw(environments(max_n=5))
    U = data.draw(strategy_matrices(env))
    rule = data.draw(st.sampled_from(RULES))
    for witness in is_nash(env, U, rule).witnesses:
        before = goodness_vector(env, U, witness.deviator)
        after = goodness_vector(env, deviate(env, U, witness.deviator, witness.row), witness.deviator)
        assert witness.coordinate in before.gains(after)
        if rule is DeviationRule.PROFITABLE:
            assert improves(before, after)


def random_environment(rng, max_n=8, max_q=12):
    n = int(rng.integers(2, max_n + 1))
    pairs = list(combinations(range(1, n + 1), 2))
    order = rng.permutation(len(pairs))
    q = int(rng.integers(0, min(max_q, len(pairs)) + 1))
    adversaries = [pairs[k] for k in order[:q]]
    friends = [pairs[k] for k in order[q:] if rng.random() < 0.3]
    p = [Fraction(int(rng.integers(0, 13)), int(rng.integers(1, 4))) for _ in range(n)]
    return build_environment([f"C{i}" for i in range(1, n + 1)], p, friends, adversaries)


def test_seeded_ensemble():
    start = time.perf_counter()
    rng = np.random.default_rng(2021)
    for _ in range(500):
        env = random_environment(rng)
        ordering = Ordering(tuple(int(k) + 1 for k in rng.permutation(env.q)))
        U, dec = construct_equilibrium(env, ordering)
        assert check_decomposition(env, dec).ok
        assert validate_strategy(env, U.u) == U
        for witness in is_nash(env, U).witnesses:
            assert dec.c[witness.deviator - 1] == 0 < dec.c[witness.coordinate - 1]
    assert time.perf_counter() - start < 60


@given(st.data())
def test_residuals_shrink_and_stay_nonnegative(data):
    env = data.draw(environments(max_n=7))
    ordering = Ordering(tuple(data.draw(st.permutations(range(1, env.q + 1)))))
    trace = list(residual_trace(env, ordering))
    assert len(trace) == env.q + 1
    for before, after in zip(trace, trace[1:]):
        assert all(b >= a >= 0 for b, a in zip(before, after))


@given(environments(max_n=7))
def test_reserve_holders_are_safe_against_precarious_adversaries(env):
    U, dec = construct_equilibrium(env)
    states = state_vector(env, U)
    for i in env.labels:
        if dec.c[i - 1] > 0:
            assert states[i] is State.SAFE
            assert all(states[j] is State.PRECARIOUS for j in env.adversaries_of(i))


@st.composite
def feasible_decompositions(draw, max_n=6):
    """Any d >= 0 and c >= 0 with no adversary pair holding reserve on both ends; powers follow from B d + c."""
    n = draw(st.integers(min_value=1, max_value=max_n))
    pairs = list(combinations(range(1, n + 1), 2))
    kinds = draw(st.lists(st.sampled_from([None, "friend", "adversary"]), min_size=len(pairs), max_size=len(pairs)))
    friends = [pair for pair, kind in zip(pairs, kinds) if kind == "friend"]
    adversaries = [pair for pair, kind in zip(pairs, kinds) if kind == "adversary"]
    d = draw(st.lists(powers, min_size=len(adversaries), max_size=len(adversaries)))
    c = draw(st.lists(powers, min_size=n, max_size=n))
    for i, j in adversaries:
        if c[i - 1] > 0 and c[j - 1] > 0:
            c[j - 1] = Fraction(0)
    p = list(c)
    for (i, j), committed in zip(adversaries, d):
        p[i - 1] += committed
        p[j - 1] += committed
    env = build_environment([f"C{i}" for i in range(1, n + 1)], p, friends, adversaries)
    return env, Decomposition.of(d, c)


@given(feasible_decompositions(), st.sampled_from(RULES))
def test_refutations_of_any_feasible_decomposition(case, rule):
    env, dec = case
    assert check_decomposition(env, dec)
    U = strategy_from_decomposition(env, dec)
    states = state_vector(env, U)
    for witness in is_nash(env, U, rule).witnesses:
        assert dec.c[witness.deviator - 1] == 0
        assert env.relation(witness.deviator, witness.coordinate) == "adversary"
        assert states[witness.coordinate] is State.SAFE
