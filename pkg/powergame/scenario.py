"""Line-based text formats for scenarios, strategy matrices and decompositions.

    powergame-scenario 1            powergame-strategy 1        powergame-decomposition 1
    country <id> <name> <power>     n <n>                       d <q rationals>
    friend <id> <id>                <n rows of n rationals>     c <n rationals>
    adversary <id> <id>

Blank lines and everything after `#` are ignored. Rationals are written as "a/b", integers or decimals and
are read exactly.
"""

from __future__ import annotations

import logging
import os
import re
from pathlib import Path
from typing import Iterator, NamedTuple

from powergame.core import Environment, StrategyMatrix, build_environment, to_rational, validate_strategy
from powergame.equilibrium import Decomposition
from powergame.errors import InvalidEnvironment, ScenarioSyntaxError

logger = logging.getLogger(__name__)

SCENARIO_HEADER = "powergame-scenario"
STRATEGY_HEADER = "powergame-strategy"
DECOMPOSITION_HEADER = "powergame-decomposition"
FORMAT_VERSION = "1"

Source = str | os.PathLike


class Token(NamedTuple):
    column: int
    text: str


class Line(NamedTuple):
    number: int
    tokens: tuple[Token, ...]

    @property
    def end(self) -> int:
        last = self.tokens[-1]
        return last.column + len(last.text)


class _Reader:
    """Walks the non-blank lines of one document, raising position-annotated syntax errors."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines = list(_tokenize(text))
        self.last_line = text.count("\n") + 1

    def error(self, message: str, line: int, column: int = 1) -> ScenarioSyntaxError:
        return ScenarioSyntaxError(message, line, column, self.source)

    def header(self, expected: str) -> Iterator[Line]:
        lines = iter(self.lines)
        first = next(lines, None)
        if first is None:
            raise self.error(f"empty document, expected '{expected} {FORMAT_VERSION}'", 1)
        keyword, *rest = first.tokens
        if keyword.text != expected:
            raise self.error(f"expected '{expected}' header, got {keyword.text!r}", first.number, keyword.column)
        if len(rest) != 1 or rest[0].text != FORMAT_VERSION:
            column = rest[0].column if rest else first.end
            raise self.error(f"unsupported format version, expected {FORMAT_VERSION}", first.number, column)
        return lines

    def arity(self, line: Line, count: int):
        """Checks the line carries exactly `count` tokens after its keyword."""
        if len(line.tokens) - 1 < count:
            raise self.error(f"{line.tokens[0].text}: expected {count} values", line.number, line.end)
        if len(line.tokens) - 1 > count:
            extra = line.tokens[count + 1]
            raise self.error(f"{line.tokens[0].text}: unexpected {extra.text!r}", line.number, extra.column)

    def integer(self, line: Line, token: Token) -> int:
        if not re.fullmatch(r"[+-]?\d+", token.text):
            raise self.error(f"expected an integer, got {token.text!r}", line.number, token.column)
        return int(token.text)

    def rational(self, line: Line, token: Token):
        try:
            return to_rational(token.text)
        except (ValueError, ZeroDivisionError):
            raise self.error(f"expected a rational, got {token.text!r}", line.number, token.column) from None


def _tokenize(text: str) -> Iterator[Line]:
    for number, raw in enumerate(text.splitlines(), 1):
        content = raw.split("#", 1)[0]
        tokens = tuple(Token(match.start() + 1, match.group()) for match in re.finditer(r"\S+", content))
        if tokens:
            yield Line(number, tokens)


def _load(source: Source) -> tuple[str, str]:
    """A path-like, or a one-line string naming an existing file, is read; any other string is the document."""
    if isinstance(source, str) and "\n" not in source and os.path.isfile(source):
        source = Path(source)
    if isinstance(source, os.PathLike):
        with open(source, "r") as f:
            return f.read(), str(source)
    return source, "<text>"


def parse_scenario(source: Source) -> Environment:
    """Parse scenario text, or the file at `source` when it is a path or names an existing file."""
    text, name = _load(source)
    reader = _Reader(text, name)

    countries: dict[int, tuple[str, object]] = {}
    relations = {"friend": [], "adversary": []}
    for line in reader.header(SCENARIO_HEADER):
        keyword = line.tokens[0]
        match keyword.text:
            case "country":
                reader.arity(line, 3)
                _, id_token, name_token, power_token = line.tokens
                label = reader.integer(line, id_token)
                if label in countries:
                    raise reader.error(f"country {label} defined twice", line.number, id_token.column)
                countries[label] = (name_token.text, reader.rational(line, power_token))
            case "friend" | "adversary":
                reader.arity(line, 2)
                relations[keyword.text].append(tuple(reader.integer(line, token) for token in line.tokens[1:]))
            case _:
                raise reader.error(f"unknown keyword {keyword.text!r}", line.number, keyword.column)

    if sorted(countries) != list(range(1, len(countries) + 1)):
        missing = sorted(set(range(1, max(countries, default=0) + 1)) - set(countries))
        raise reader.error(f"country ids must be 1..{len(countries)}, missing {missing}", reader.last_line)

    ordered = [countries[i] for i in sorted(countries)]
    env = build_environment(
        [name for name, _ in ordered], [power for _, power in ordered], relations["friend"], relations["adversary"]
    )
    logger.debug("parsed %s: n=%d friends=%d adversaries=%d", name, env.n, len(env.friends), env.q)
    return env


def format_scenario(env: Environment) -> str:
    unwritable = [
        f"country {i}: name {name!r} cannot be written"
        for i, name in enumerate(env.names, 1)
        if not name or re.search(r"\s|#", name)
    ]
    if unwritable:
        raise InvalidEnvironment(unwritable)

    lines = [f"{SCENARIO_HEADER} {FORMAT_VERSION}"]
    lines += [f"country {i} {name} {power}" for i, (name, power) in enumerate(zip(env.names, env.power), 1)]
    lines += [f"friend {i} {j}" for i, j in sorted(env.friends)]
    lines += [f"adversary {i} {j}" for i, j in env.adversary_pairs]
    return "\n".join(lines) + "\n"


def parse_strategy(source: Source, env: Environment) -> StrategyMatrix:
    """Parse a strategy matrix and validate it against env."""
    text, name = _load(source)
    reader = _Reader(text, name)
    lines = reader.header(STRATEGY_HEADER)

    size_line = next(lines, None)
    if size_line is None or size_line.tokens[0].text != "n":
        number = size_line.number if size_line else reader.last_line
        raise reader.error("expected 'n <n>' after the header", number)
    reader.arity(size_line, 1)
    n = reader.integer(size_line, size_line.tokens[1])

    rows = []
    for line in lines:
        if len(rows) == n:
            raise reader.error(f"more than {n} rows", line.number)
        if len(line.tokens) != n:
            column = line.tokens[n].column if len(line.tokens) > n else line.end
            raise reader.error(f"row has {len(line.tokens)} entries, expected {n}", line.number, column)
        rows.append([reader.rational(line, token) for token in line.tokens])
    if len(rows) != n:
        raise reader.error(f"{len(rows)} rows, expected {n}", reader.last_line)

    return validate_strategy(env, rows)


def format_strategy(U: StrategyMatrix) -> str:
    lines = [f"{STRATEGY_HEADER} {FORMAT_VERSION}", f"n {U.n}"]
    lines += [" ".join(str(x) for x in row) for row in U.rows()]
    return "\n".join(lines) + "\n"


def parse_decomposition(source: Source) -> Decomposition:
    text, name = _load(source)
    reader = _Reader(text, name)

    vectors = {}
    for line in reader.header(DECOMPOSITION_HEADER):
        keyword = line.tokens[0]
        if keyword.text not in ("d", "c"):
            raise reader.error(f"unknown keyword {keyword.text!r}, expected 'd' or 'c'", line.number, keyword.column)
        if keyword.text in vectors:
            raise reader.error(f"'{keyword.text}' given twice", line.number, keyword.column)
        vectors[keyword.text] = [reader.rational(line, token) for token in line.tokens[1:]]

    for key in ("d", "c"):
        if key not in vectors:
            raise reader.error(f"missing '{key}' line", reader.last_line)
    return Decomposition.of(vectors["d"], vectors["c"])


def format_decomposition(dec: Decomposition) -> str:
    lines = [
        f"{DECOMPOSITION_HEADER} {FORMAT_VERSION}",
        " ".join(["d", *map(str, dec.d)]),
        " ".join(["c", *map(str, dec.c)]),
    ]
    return "\n".join(lines) + "\n"


def read_scenario(path: Source) -> Environment:
    return parse_scenario(Path(path))


def read_strategy(path: Source, env: Environment) -> StrategyMatrix:
    return parse_strategy(Path(path), env)


def read_decomposition(path: Source) -> Decomposition:
    return parse_decomposition(Path(path))


def _write(path: Source, text: str):
    with open(path, "w") as f:
        f.write(text)
    logger.info("wrote %s", path)


def write_scenario(path: Source, env: Environment):
    _write(path, format_scenario(env))


def write_strategy(path: Source, U: StrategyMatrix):
    _write(path, format_strategy(U))


def write_decomposition(path: Source, dec: Decomposition):
    _write(path, format_decomposition(dec))
