from fractions import Fraction
from itertools import combinations
from pathlib import Path

import hypothesis.strategies as st
import pytest
from funcy import print_durations
from hypothesis import HealthCheck, settings

from powergame.core import build_environment, state_vector, validate_strategy
from powergame.equilibrium import DEFAULT_RULE, is_nash
from powergame.scenario import read_scenario, read_strategy

settings.register_profile(
    "powergame", derandomize=True, deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("powergame")

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scenario(name):
    return read_scenario(SCENARIOS / f"{name}.scn")


def strategy(env, name):
    return read_strategy(SCENARIOS / f"{name}.str", env)


@print_durations
def run_expect(scenario_name, strategy_name, states, equilibrium, rule=DEFAULT_RULE):
    env = scenario(scenario_name)
    U = strategy(env, strategy_name)

    found = str(state_vector(env, U))
    print(f"{scenario_name}/{strategy_name}: {found}")
    assert found == states

    report = is_nash(env, U, rule)
    assert report.is_equilibrium == equilibrium
    return report


@pytest.fixture
def e2():
    return scenario("e2")


@pytest.fixture
def e3():
    return scenario("e3")


@pytest.fixture
def e4():
    return scenario("e4")


powers = st.fractions(min_value=0, max_value=4, max_denominator=3)


@st.composite
def environments(draw, max_n=6, power=powers):
    n = draw(st.integers(min_value=1, max_value=max_n))
    p = draw(st.lists(power, min_size=n, max_size=n))
    pairs = list(combinations(range(1, n + 1), 2))
    kinds = draw(st.lists(st.sampled_from([None, "friend", "adversary"]), min_size=len(pairs), max_size=len(pairs)))
    friends, adversaries = [], []
    for pair, kind in zip(pairs, kinds):
        if kind == "friend":
            friends.append(pair)
        elif kind == "adversary":
            adversaries.append(pair)
    return build_environment([f"C{i}" for i in range(1, n + 1)], p, friends, adversaries)


@st.composite
def strategy_matrices(draw, env):
    """A valid strategy matrix: each p_i split in random integer proportions over {i} u F_i u A_i."""
    rows = []
    for i in env.labels:
        relevant = env.relevant(i)
        weights = draw(st.lists(st.integers(min_value=0, max_value=3), min_size=len(relevant), max_size=len(relevant)))
        if not any(weights):
            weights[relevant.index(i)] = 1
        row = [Fraction(0)] * env.n
        for k, weight in zip(relevant, weights):
            row[k - 1] = env.power[i - 1] * weight / sum(weights)
        rows.append(row)
    return validate_strategy(env, rows)
