"""Graphviz DOT export of an environment, optionally weighted by a strategy matrix."""

from __future__ import annotations

import logging

import pydot

from powergame.core import Environment, StrategyMatrix, validate_strategy

logger = logging.getLogger(__name__)

COLORS = {"friend": "green", "adversary": "red"}


def export_dot(env: Environment, U: StrategyMatrix | None = None) -> str:
    """Two directed edges per relation, in relation-label order; weights are u_ij, node weights the reserves."""
    if U is not None:
        validate_strategy(env, U)

    graph = pydot.Dot("powergame", graph_type="digraph")
    for i, name in enumerate(env.names, 1):
        label = name if U is None else f"{name}\\n{U[i, i]}"
        graph.add_node(pydot.Node(f"c{i}", label=label))

    for i, j in env.relation_pairs:
        color = COLORS[env.relation(i, j)]
        for a, b in ((i, j), (j, i)):
            attributes = {"color": color}
            if U is not None:
                attributes["label"] = str(U[a, b])
            graph.add_edge(pydot.Edge(f"c{a}", f"c{b}", **attributes))

    logger.debug("dot export: %d nodes, %d edges", env.n, 2 * env.m)
    return graph.to_string()
