import pytest
from conftest import environments, strategy_matrices
from hypothesis import given, settings
from hypothesis import strategies as st

from powergame.core import State, StateVector, build_environment, state_vector, validate_strategy
from powergame.errors import IrrelevantCoordinate
from powergame.preference import (
    Comparison,
    axiom1_compare,
    axiom2_compare,
    goodness_from_states,
    goodness_vector,
    is_admissible_alternative,
    is_good,
    strictly_preferred,
    strictly_self_preferred,
    weakly_preferred,
)


def test_goodness_of_e2(e2):
    U = validate_strategy(e2, [[1, 1], [0, 1]])
    assert goodness_vector(e2, U, 1).as_dict() == {1: True, 2: True}
    all_reserve = validate_strategy(e2, [[2, 0], [0, 1]])
    goodness = goodness_vector(e2, all_reserve, 1)
    assert goodness.as_dict() == {1: True, 2: False}
    assert goodness.bad == (2,)


@pytest.mark.parametrize(
    "relation, state, good",
    [
        ("self", State.PRECARIOUS, True),
        ("self", State.UNSAFE, False),
        ("adversary", State.PRECARIOUS, True),
        ("adversary", State.SAFE, False),
    ],
)
def test_is_good(e2, relation, state, good):
    j = 1 if relation == "self" else 2
    assert is_good(e2, 1, j, state) == good


def test_unrelated_coordinate(e4):
    with pytest.raises(IrrelevantCoordinate):
        is_good(e4, 1, 3, State.SAFE)
    U = validate_strategy(e4, [[1, 0, 0], [0, 0, 1], [0, 1, 2]])
    with pytest.raises(IrrelevantCoordinate):
        goodness_vector(e4, U, 1)[3]


def test_flipping_the_adversary_is_preferred(e2):
    U = validate_strategy(e2, [[2, 0], [0, 1]])
    V = validate_strategy(e2, [[1, 1], [0, 1]])
    assert weakly_preferred(e2, 1, U, V)
    assert not weakly_preferred(e2, 1, V, U)
    assert strictly_preferred(e2, 1, U, V)
    assert axiom2_compare(e2, 1, U, V) is Comparison.V_WEAKLY_PREFERRED
    assert axiom2_compare(e2, 1, V, U) is Comparison.U_WEAKLY_PREFERRED
    assert axiom2_compare(e2, 1, U, U) is Comparison.INDIFFERENT


def test_incomparable():
    env = build_environment(["A", "B", "C"], [1, 1, 1], adversaries=[(1, 2), (1, 3)])
    # V makes 2 non-safe and leaves 3 safe; W the other way round
    V = validate_strategy(env, [[0, 1, 0], [0, 1, 0], [0, 0, 1]])
    W = validate_strategy(env, [[0, 0, 1], [0, 1, 0], [0, 0, 1]])
    assert axiom2_compare(env, 1, V, W) is Comparison.INCOMPARABLE


def test_self_survival_both_unsafe(e2):
    U = validate_strategy(e2, [[0, 2], [0, 1]])
    V = validate_strategy(e2, [[0, 2], [1, 0]])
    assert not strictly_self_preferred(e2, 2, U, V)


def test_self_survival_gained():
    env = build_environment(["A", "B"], [1, 2], adversaries=[(1, 2)])
    U = validate_strategy(env, [[1, 0], [0, 2]])
    assert not strictly_self_preferred(env, 1, U, U)
    threatened = validate_strategy(env, [[1, 0], [2, 0]])
    fighting = validate_strategy(env, [[0, 1], [1, 1]])
    assert strictly_self_preferred(env, 1, threatened, fighting)
    assert strictly_preferred(env, 1, threatened, fighting)


def test_friend_state_under_axiom1(e4):
    precarious = validate_strategy(e4, [[1, 0, 0], [0, 1, 0], [0, 1, 2]])
    # country 1 moves its power to its friend, so 1 and 2 both change
    shifted = validate_strategy(e4, [[0, 1, 0], [0, 1, 0], [0, 3, 0]])
    assert axiom1_compare(e4, 1, shifted, precarious) is Comparison.NOT_ADMISSIBLE
    # only country 2 changes
    unsafe = validate_strategy(e4, [[1, 0, 0], [0, 1, 0], [0, 2, 1]])
    assert is_admissible_alternative(e4, unsafe, precarious)
    assert axiom1_compare(e4, 1, unsafe, precarious) is Comparison.V_WEAKLY_PREFERRED
    assert axiom1_compare(e4, 1, precarious, unsafe) is Comparison.U_WEAKLY_PREFERRED


@settings(max_examples=1000)
@given(st.data())
def test_weak_preference_is_a_preorder(data):
    env = data.draw(environments(max_n=5))
    U, V, W = (data.draw(strategy_matrices(env)) for _ in range(3))
    i = data.draw(st.sampled_from(list(env.labels)))
    assert weakly_preferred(env, i, U, U)
    if weakly_preferred(env, i, U, V) and weakly_preferred(env, i, V, W):
        assert weakly_preferred(env, i, U, W)


@given(st.data())
def test_axiom1_agrees_with_axiom2_on_admissible_pairs(data):
    env = data.draw(environments(max_n=4))
    U, V = data.draw(strategy_matrices(env)), data.draw(strategy_matrices(env))
    i = data.draw(st.sampled_from(list(env.labels)))
    comparison = axiom1_compare(env, i, U, V)
    if comparison is Comparison.NOT_ADMISSIBLE:
        assert not is_admissible_alternative(env, U, V)
    else:
        assert comparison is axiom2_compare(env, i, U, V)


@given(st.data())
def test_weak_preference_ignores_unrelated_countries(data):
    env = data.draw(environments(max_n=5))
    U, V = data.draw(strategy_matrices(env)), data.draw(strategy_matrices(env))
    i = data.draw(st.sampled_from(list(env.labels)))

    def rewrite_unrelated(states):
        relevant = env.relevant(i)
        return StateVector(
            tuple(state if j in relevant else data.draw(st.sampled_from(State)) for j, state in enumerate(states, 1))
        )

    before = goodness_from_states(env, rewrite_unrelated(state_vector(env, U)), i)
    after = goodness_from_states(env, rewrite_unrelated(state_vector(env, V)), i)
    assert before == goodness_vector(env, U, i)
    assert before.dominated_by(after) == weakly_preferred(env, i, U, V)
