"""Plain-text instance and solution files.

Instance file::

    odimcf 1
    nodes <N>
    arcs <A>
    <tail> <head> <cost> <capacity>      (A lines)
    commodities <K>
    <origin> <destination> <demand>     (K lines)
    certificate                          (optional)
    <arc id> <arc id> ...                (K lines, "-" for an empty route)

Solution file::

    odimcf-solution 1
    instance <label>
    routes <K>
    <arc id> <arc id> ...                (K lines, "-" for an empty route)
    cost <total cost>

``#`` starts a comment; blank lines are ignored.  Reals are written with
``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import os
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

from .exceptions import InstanceFormatError, InvalidInstanceError
from .model import Arc, Commodity, Instance, Network, Route

MAGIC = "odimcf"
SOLUTION_MAGIC = "odimcf-solution"
VERSION = 1
EMPTY_ROUTE = "-"


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...]
    cost: float
    instance_label: str = ""


def _format_route(route: Sequence[int]) -> str:
    return " ".join(str(a) for a in route) if route else EMPTY_ROUTE


def format_instance(instance: Instance) -> str:
    net = instance.network
    lines = [f"{MAGIC} {VERSION}", f"nodes {net.num_nodes}", f"arcs {net.num_arcs}"]
    lines += [f"{a.tail} {a.head} {a.cost!r} {a.capacity!r}" for a in net.arcs]
    lines.append(f"commodities {instance.num_commodities}")
    lines += [f"{c.origin} {c.destination} {c.demand!r}" for c in instance.commodities]
    if instance.certificate is not None:
        lines.append("certificate")
        lines += [_format_route(r) for r in instance.certificate]
    return "\n".join(lines) + "\n"


def write_instance(path: str | os.PathLike, instance: Instance) -> None:
    Path(path).write_text(format_instance(instance))


class _Lines:
    """Iterator over meaningful (line number, tokens) pairs."""

    def __init__(self, text: str) -> None:
        self._items: Iterator[tuple[int, list[str]]] = (
            (no, line.split("#", 1)[0].split())
            for no, line in enumerate(text.splitlines(), start=1)
        )
        self.last_line = 0
        self._peeked: tuple[int, list[str]] | None = None

    def _advance(self) -> tuple[int, list[str]] | None:
        for no, tokens in self._items:
            if tokens:
                return no, tokens
        return None

    def peek(self) -> tuple[int, list[str]] | None:
        if self._peeked is None:
            self._peeked = self._advance()
        return self._peeked

    def next(self, what: str) -> tuple[int, list[str]]:
        item = self.peek()
        self._peeked = None
        if item is None:
            raise InstanceFormatError(f"file ended early: missing {what}", self.last_line + 1)
        self.last_line = item[0]
        return item

    def header(self, keyword: str) -> int:
        no, tokens = self.next(f"section '{keyword}'")
        if len(tokens) != 2 or tokens[0] != keyword:
            raise InstanceFormatError(f"expected '{keyword} <count>', found {' '.join(tokens)!r}", no)
        return _parse_int(tokens[1], no, minimum=0)


def _parse_int(token: str, line: int, minimum: int | None = None) -> int:
    try:
        value = int(token)
    except ValueError:
        raise InstanceFormatError(f"expected an integer, found {token!r}", line) from None
    if minimum is not None and value < minimum:
        raise InstanceFormatError(f"value {value} is below {minimum}", line)
    return value


def _parse_float(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f"expected a real number, found {token!r}", line) from None


def _parse_route(tokens: list[str], line: int) -> Route:
    if tokens == [EMPTY_ROUTE]:
        return ()
    return tuple(_parse_int(t, line, minimum=0) for t in tokens)


def _check_magic(lines: _Lines, magic: str) -> None:
    no, tokens = lines.next("header")
    if len(tokens) != 2 or tokens[0] != magic:
        raise InstanceFormatError(f"expected header '{magic} {VERSION}'", no)
    if _parse_int(tokens[1], no) != VERSION:
        raise InstanceFormatError(f"unsupported format version {tokens[1]}", no)


def parse_instance(text: str) -> Instance:
    lines = _Lines(text)
    _check_magic(lines, MAGIC)
    num_nodes = lines.header("nodes")
    num_arcs = lines.header("arcs")
    arcs: list[Arc] = []
    seen: dict[tuple[int, int], int] = {}
    for i in range(num_arcs):
        no, tokens = lines.next(f"arc line {i + 1} of {num_arcs}")
        if len(tokens) != 4:
            raise InstanceFormatError(f"arc line needs 4 fields, found {len(tokens)}", no)
        tail, head = _parse_int(tokens[0], no), _parse_int(tokens[1], no)
        if (tail, head) in seen:
            raise InstanceFormatError(f"duplicate arc {tail}->{head} (parallel arcs are not allowed)", no)
        seen[(tail, head)] = i
        try:
            arcs.append(Arc(i, tail, head, _parse_float(tokens[2], no), _parse_float(tokens[3], no)))
        except InvalidInstanceError as exc:
            raise InstanceFormatError(str(exc), no) from None
    num_com = lines.header("commodities")
    commodities: list[Commodity] = []
    for i in range(num_com):
        no, tokens = lines.next(f"commodity line {i + 1} of {num_com}")
        if len(tokens) != 3:
            raise InstanceFormatError(f"commodity line needs 3 fields, found {len(tokens)}", no)
        try:
            commodities.append(
                Commodity(i, _parse_int(tokens[0], no), _parse_int(tokens[1], no), _parse_float(tokens[2], no))
            )
        except InvalidInstanceError as exc:
            raise InstanceFormatError(str(exc), no) from None
    certificate = None
    item = lines.peek()
    if item is not None:
        no, tokens = lines.next("certificate")
        if tokens != ["certificate"]:
            raise InstanceFormatError(f"unexpected content {' '.join(tokens)!r}", no)
        certificate = tuple(
            _parse_route(lines.next(f"certificate route {i + 1} of {num_com}")[1], lines.last_line)
            for i in range(num_com)
        )
        extra = lines.peek()
        if extra is not None:
            raise InstanceFormatError("unexpected content after certificate", extra[0])
    try:
        return Instance(Network(num_nodes, arcs), tuple(commodities), certificate)
    except InvalidInstanceError as exc:
        raise InstanceFormatError(str(exc)) from None


def read_instance(path: str | os.PathLike) -> Instance:
    return parse_instance(Path(path).read_text())


def format_solution(solution: Solution) -> str:
    lines = [
        f"{SOLUTION_MAGIC} {VERSION}",
        f"instance {solution.instance_label or '-'}",
        f"routes {len(solution.routes)}",
    ]
    lines += [_format_route(r) for r in solution.routes]
    lines.append(f"cost {solution.cost!r}")
    return "\n".join(lines) + "\n"


def write_solution(path: str | os.PathLike, solution: Solution) -> None:
    Path(path).write_text(format_solution(solution))


def parse_solution(text: str) -> Solution:
    lines = _Lines(text)
    _check_magic(lines, SOLUTION_MAGIC)
    no, tokens = lines.next("section 'instance'")
    if len(tokens) < 1 or tokens[0] != "instance":
        raise InstanceFormatError("expected 'instance <label>'", no)
    label = " ".join(tokens[1:])
    count = lines.header("routes")
    routes = tuple(
        _parse_route(lines.next(f"route {i + 1} of {count}")[1], lines.last_line) for i in range(count)
    )
    no, tokens = lines.next("section 'cost'")
    if len(tokens) != 2 or tokens[0] != "cost":
        raise InstanceFormatError("expected 'cost <value>'", no)
    cost = _parse_float(tokens[1], no)
    extra = lines.peek()
    if extra is not None:
        raise InstanceFormatError("unexpected content after cost line", extra[0])
    return Solution(routes, cost, "" if label == "-" else label)


def read_solution(path: str | os.PathLike) -> Solution:
    return parse_solution(Path(path).read_text())
