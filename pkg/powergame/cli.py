"""Command line front end.

Results go to stdout (pandas tables, or JSON with --format json), diagnostics and logging to stderr.
Exit codes: 0 success or equilibrium, 1 refuted or invalid input, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import pandas as pd

from powergame.core import Environment, components, state_space_size, state_vector, supports, threats, to_rational
from powergame.dot import export_dot
from powergame.equilibrium import (
    DEFAULT_MAX_ORDERINGS,
    DEFAULT_RULE,
    DeviationRule,
    NashReport,
    Ordering,
    construct_equilibrium,
    enumerate_equilibria,
    equivalence_classes,
    is_nash,
)
from powergame.errors import PowerGameError
from powergame.oracle import DEFAULT_CAP, GridSpec, Verdict, cross_validate, reachable_states
from powergame.scenario import (
    format_decomposition,
    format_strategy,
    read_scenario,
    read_strategy,
    write_decomposition,
    write_strategy,
)

logger = logging.getLogger("powergame")

LOG_FORMAT = "%(asctime)s powergame %(levelname)s %(message)s"


def _rational(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _row(row) -> list[str]:
    return [str(x) for x in row]


def _emit(args, table: pd.DataFrame | str, payload: dict):
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif isinstance(table, pd.DataFrame):
        print(table.to_string(index=False) if len(table) else "(none)")
    else:
        print(table)


def _countries(env: Environment) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "country": list(env.labels),
            "name": list(env.names),
            "power": [str(p) for p in env.power],
            "friends": [",".join(map(str, env.friends_of(i))) for i in env.labels],
            "adversaries": [",".join(map(str, env.adversaries_of(i))) for i in env.labels],
        }
    )


def cmd_validate(args) -> int:
    env = read_scenario(args.scenario)
    payload = {
        "valid": True,
        "n": env.n,
        "m": env.m,
        "q": env.q,
        "countries": [
            {"id": i, "name": name, "power": str(p)} for i, (name, p) in enumerate(zip(env.names, env.power), 1)
        ],
        "friends": [list(pair) for pair in sorted(env.friends)],
        "adversaries": [list(pair) for pair in env.adversary_pairs],
    }
    if args.format == "json":
        _emit(args, "", payload)
    else:
        print(f"valid: n={env.n} m={env.m} q={env.q}")
        _emit(args, _countries(env), payload)
    return 0


def cmd_states(args) -> int:
    env = read_scenario(args.scenario)
    U = read_strategy(args.strategy, env)
    columns = zip(env.labels, env.names, supports(env, U), threats(env, U), state_vector(env, U))
    rows = [
        {"country": i, "name": name, "support": str(sigma), "threat": str(tau), "state": state.value}
        for i, name, sigma, tau, state in columns
    ]
    _emit(args, pd.DataFrame(rows), {"countries": rows})
    return 0


def _witnesses(report: NashReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"deviator": w.deviator, "coordinate": w.coordinate, "margin": str(w.margin), "row": " ".join(_row(w.row))}
            for w in report.witnesses
        ],
        columns=["deviator", "coordinate", "margin", "row"],
    )


def _report_payload(report: NashReport) -> dict:
    return {
        "rule": report.rule.value,
        "equilibrium": report.is_equilibrium,
        "witnesses": [
            {"deviator": w.deviator, "coordinate": w.coordinate, "margin": str(w.margin), "row": _row(w.row)}
            for w in report.witnesses
        ],
    }


def cmd_check_nash(args) -> int:
    env = read_scenario(args.scenario)
    U = read_strategy(args.strategy, env)
    report = is_nash(env, U, args.rule)
    if args.format == "json":
        _emit(args, "", _report_payload(report))
    elif report.is_equilibrium:
        print(f"equilibrium ({report.rule.value} rule)")
    else:
        print(f"refuted ({report.rule.value} rule), {len(report.witnesses)} witness(es)")
        _emit(args, _witnesses(report), {})
    return 0 if report.is_equilibrium else 1


def _construct_single(args, env: Environment) -> int:
    construction = construct_equilibrium(env, args.ordering)
    report = is_nash(env, construction.strategy, args.rule)

    if args.output:
        write_strategy(args.output, construction.strategy)
        write_decomposition(Path(args.output).with_suffix(".dec"), construction.decomposition)

    if args.format == "json":
        payload = {
            "ordering": str(args.ordering or Ordering.identity(env.q)),
            "strategy": [_row(row) for row in construction.strategy.rows()],
            "d": _row(construction.decomposition.d),
            "c": _row(construction.decomposition.c),
            "states": str(state_vector(env, construction.strategy)),
            **_report_payload(report),
        }
        _emit(args, "", payload)
    elif not args.output:
        print(format_strategy(construction.strategy), end="")
        print(format_decomposition(construction.decomposition), end="")

    if not report.is_equilibrium:
        logger.error("constructed matrix is refuted under the %s rule", report.rule.value)
        return 1
    return 0


def _construct_all(args, env: Environment, stem: str) -> int:
    enumeration = enumerate_equilibria(env, args.max, args.rule, args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for k, record in enumerate(enumeration.equilibria, 1):
        path = out_dir / f"{stem}-{k}.str"
        write_strategy(path, record.strategy)
        write_decomposition(path.with_suffix(".dec"), record.decomposition)
        rows.append({"file": str(path), "ordering": str(record.ordering), "states": str(record.states)})

    payload = {
        "total_orderings": enumeration.total_orderings,
        "orderings_tried": enumeration.orderings_tried,
        "distinct_constructed": enumeration.distinct_constructed,
        "refuted": [str(ordering) for ordering in enumeration.refuted],
        "equilibria": rows,
    }
    if args.format != "json":
        print(
            f"{len(rows)} equilibria from {enumeration.orderings_tried} of {enumeration.total_orderings} orderings, "
            f"{len(enumeration.refuted)} refuted"
        )
    _emit(args, pd.DataFrame(rows, columns=["file", "ordering", "states"]), payload)
    return 1 if enumeration.refuted else 0


def cmd_construct(args) -> int:
    env = read_scenario(args.scenario)
    if args.all_orderings:
        return _construct_all(args, env, Path(args.scenario).stem)
    return _construct_single(args, env)


def cmd_classes(args) -> int:
    env = read_scenario(args.scenario)
    enumeration = enumerate_equilibria(env, args.max, args.rule, args.jobs)
    classes = equivalence_classes(env, (record.strategy for record in enumeration.equilibria), args.rule)

    orderings = {record.strategy: str(record.ordering) for record in enumeration.equilibria}
    rows = [
        {"states": str(states), "size": len(members), "orderings": " ".join(orderings[U] for U in members)}
        for states, members in classes.items()
    ]
    payload = {"orderings_tried": enumeration.orderings_tried, "classes": rows}
    if args.format != "json":
        print(f"{len(rows)} classes over {len(enumeration.equilibria)} equilibria")
    _emit(args, pd.DataFrame(rows, columns=["states", "size", "orderings"]), payload)
    return 0


def cmd_oracle(args) -> int:
    env = read_scenario(args.scenario)
    U = read_strategy(args.strategy, env)
    result = cross_validate(env, U, GridSpec(args.resolution, args.cap), args.rule)

    witness = result.witness
    payload = {
        "verdict": result.verdict.value,
        "margin": None if result.margin is None else str(result.margin),
        "search_witness": None
        if witness is None
        else {"deviator": witness.deviator, "coordinate": witness.coordinate, "row": _row(witness.row)},
        **_report_payload(result.report),
    }
    if args.format == "json":
        _emit(args, "", payload)
    else:
        print(result.verdict.value)
        if result.margin is not None:
            print(f"closed-form margin: {result.margin}")
        if witness is not None:
            row = " ".join(_row(witness.row))
            print(f"search witness: country {witness.deviator} -> {row} (coordinate {witness.coordinate})")
    return 1 if result.verdict is Verdict.HARD_DISAGREEMENT else 0


def cmd_export_dot(args) -> int:
    env = read_scenario(args.scenario)
    U = read_strategy(args.strategy, env) if args.strategy else None
    text = export_dot(env, U)
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_reachable(args) -> int:
    env = read_scenario(args.scenario)
    reachable = reachable_states(env, GridSpec(args.resolution, args.cap))
    payload = {"reachable": [str(states) for states in reachable], "state_space": state_space_size(env)}
    if args.format != "json":
        print(f"{len(reachable)} of {state_space_size(env)} state vectors reachable")
    _emit(args, pd.DataFrame({"states": payload["reachable"]}), payload)
    return 0


def cmd_components(args) -> int:
    env = read_scenario(args.scenario)
    rows = [
        {
            "component": k,
            "countries": ",".join(map(str, component.labels)),
            "names": ",".join(component.environment.names),
            "adversary_pairs": component.environment.q,
        }
        for k, component in enumerate(components(env), 1)
    ]
    _emit(args, pd.DataFrame(rows), {"components": rows})
    return 0


def _rule_option(parser):
    parser.add_argument(
        "--rule",
        type=DeviationRule,
        choices=list(DeviationRule),
        default=DEFAULT_RULE,
        metavar="{" + ",".join(rule.value for rule in DeviationRule) + "}",
        help=f"which deviations refute an equilibrium (default {DEFAULT_RULE.value})",
    )


def _enumeration_options(parser):
    parser.add_argument("--max", type=_positive, default=DEFAULT_MAX_ORDERINGS, help="orderings to try")
    parser.add_argument("--jobs", type=_positive, default=1, help="worker processes")


def _grid_options(parser):
    parser.add_argument("--resolution", type=_rational, required=True, help="grid step, e.g. 1/2")
    parser.add_argument("--cap", type=_positive, default=DEFAULT_CAP, help="enumeration size limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powergame", description="Networked power allocation games.")
    parser.add_argument("--format", choices=["table", "json"], default="table")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="parse and validate a scenario")
    validate.add_argument("scenario")
    validate.set_defaults(run=cmd_validate)

    states = commands.add_parser("states", help="support, threat and state per country")
    states.add_argument("scenario")
    states.add_argument("strategy")
    states.set_defaults(run=cmd_states)

    check = commands.add_parser("check-nash", help="verify a strategy matrix is an equilibrium")
    check.add_argument("scenario")
    check.add_argument("strategy")
    _rule_option(check)
    check.set_defaults(run=cmd_check_nash)

    construct = commands.add_parser("construct", help="build an equilibrium candidate by pairwise commitment")
    construct.add_argument("scenario")
    construct.add_argument("--ordering", type=Ordering.parse, help="adversary labels, e.g. 2,1,3")
    construct.add_argument("--all-orderings", action="store_true")
    construct.add_argument("-o", "--output", help="strategy file to write (decomposition goes next to it)")
    construct.add_argument("--out-dir", default=".", help="directory for --all-orderings output")
    _enumeration_options(construct)
    _rule_option(construct)
    construct.set_defaults(run=cmd_construct)

    classes = commands.add_parser("classes", help="group constructed equilibria by state vector")
    classes.add_argument("scenario")
    _enumeration_options(classes)
    _rule_option(classes)
    classes.set_defaults(run=cmd_classes)

    oracle = commands.add_parser("oracle", help="cross-check the verifier by grid search")
    oracle.add_argument("scenario")
    oracle.add_argument("strategy")
    _grid_options(oracle)
    _rule_option(oracle)
    oracle.set_defaults(run=cmd_oracle)

    dot = commands.add_parser("export-dot", help="write the relation graph as DOT")
    dot.add_argument("scenario")
    dot.add_argument("strategy", nargs="?")
    dot.add_argument("-o", "--output")
    dot.set_defaults(run=cmd_export_dot)

    reachable = commands.add_parser("reachable", help="state vectors realized by grid strategy matrices")
    reachable.add_argument("scenario")
    _grid_options(reachable)
    reachable.set_defaults(run=cmd_reachable)

    split = commands.add_parser("components", help="connected components of the relation graph")
    split.add_argument("scenario")
    split.set_defaults(run=cmd_components)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level, format=LOG_FORMAT)

    if args.command == "construct" and args.all_orderings and args.ordering is not None:
        parser.error("--ordering and --all-orderings are mutually exclusive")

    try:
        return args.run(args)
    except (PowerGameError, OSError) as e:
        print(f"powergame: error: {e}", file=sys.stderr)
        return 1
