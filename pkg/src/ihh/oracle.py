"""Exact and bounding references for small instances.

:func:`exact_solve` enumerates every simple path per commodity and searches
assignments by branch and bound.  :func:`lower_bound` drops the capacity
constraints, which leaves one independent shortest-path problem per commodity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import OracleLimitError
from .model import FEASIBILITY_RTOL, Instance, Network, Route
from .shortest_path import sp_original

DEFAULT_MAX_PATHS = 10_000
DEFAULT_MAX_COMMODITIES = 12


@dataclass(frozen=True)
class OracleLimits:
    max_paths_per_commodity: int = DEFAULT_MAX_PATHS
    max_commodities: int = DEFAULT_MAX_COMMODITIES


@dataclass
class OracleResult:
    # None when no capacity-feasible routing exists.
    optimal_cost: float | None
    optimal_routes: tuple[Route, ...] = ()
    nodes_explored: int = 0

    @property
    def feasible(self) -> bool:
        return self.optimal_cost is not None


def simple_paths(network: Network, origin: int, destination: int, limit: int | None = None) -> list[Route]:
    """All simple ``origin`` to ``destination`` paths, depth first.

    Raises :class:`OracleLimitError` once more than ``limit`` paths exist.
    """
    paths: list[Route] = []
    stack: list[int] = []
    on_path = [False] * network.num_nodes
    out_adj = network.out_adjacency
    heads = network.head_list

    def visit(node: int) -> None:
        if node == destination:
            paths.append(tuple(stack))
            if limit is not None and len(paths) > limit:
                raise OracleLimitError(f"more than {limit} simple paths from {origin} to {destination}")
            return
        on_path[node] = True
        for a in out_adj[node]:
            nxt = heads[a]
            if not on_path[nxt]:
                stack.append(a)
                visit(nxt)
                stack.pop()
        on_path[node] = False

    if origin != destination:
        visit(origin)
    return paths


def lower_bound(instance: Instance) -> float:
    """Demand-weighted uncapacitated shortest-path cost.

    Returns ``math.inf`` when some commodity cannot reach its destination at
    all, since no routing of the instance is then possible.
    """
    total = 0.0
    for com in instance.commodities:
        result = sp_original(instance.network, com)
        if not result.route:
            return math.inf
        total += com.demand * result.cost
    return total


@dataclass
class _Search:
    demands: list[float]
    options: list[list[tuple[float, Route]]]
    tail_bound: list[float]
    capacity_limit: np.ndarray
    load: np.ndarray
    best_cost: float = math.inf
    best_choice: list[int] = field(default_factory=list)
    choice: list[int] = field(default_factory=list)
    nodes: int = 0

    def run(self, depth: int, cost: float) -> None:
        self.nodes += 1
        if depth == len(self.options):
            if cost < self.best_cost:
                self.best_cost = cost
                self.best_choice = list(self.choice)
            return
        d = self.demands[depth]
        rest = self.tail_bound[depth + 1]
        for index, (path_cost, route) in enumerate(self.options[depth]):
            new_cost = cost + d * path_cost
            if new_cost + rest >= self.best_cost:
                # Options are sorted by cost, so every later one is pruned too.
                break
            arcs = list(route)
            self.load[arcs] += d
            if np.all(self.load[arcs] <= self.capacity_limit[arcs]):
                self.choice.append(index)
                self.run(depth + 1, new_cost)
                self.choice.pop()
            self.load[arcs] -= d


def exact_solve(instance: Instance, limits: OracleLimits | None = None) -> OracleResult:
    """Provably optimal capacity-feasible routing, or an infeasible result."""
    limits = limits or OracleLimits()
    net = instance.network
    if instance.num_commodities > limits.max_commodities:
        raise OracleLimitError(
            f"{instance.num_commodities} commodities exceed the oracle limit of {limits.max_commodities}"
        )
    if instance.num_commodities == 0:
        return OracleResult(0.0, (), 1)
    costs = net.costs.tolist()
    per_commodity: list[list[tuple[float, Route]]] = []
    for com in instance.commodities:
        paths = simple_paths(net, com.origin, com.destination, limits.max_paths_per_commodity)
        if not paths:
            return OracleResult(None, (), 0)
        priced = sorted(((sum(costs[a] for a in p), p) for p in paths), key=lambda item: (item[0], item[1]))
        per_commodity.append(priced)

    # Largest demands first: they are the hardest to place and prune best.
    order = sorted(range(instance.num_commodities), key=lambda k: (-instance.commodities[k].demand, k))
    demands = [instance.commodities[k].demand for k in order]
    options = [per_commodity[k] for k in order]
    tail = [0.0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        tail[i] = tail[i + 1] + demands[i] * options[i][0][0]
    caps = net.capacities
    search = _Search(
        demands=demands,
        options=options,
        tail_bound=tail,
        capacity_limit=caps + FEASIBILITY_RTOL * caps,
        load=np.zeros(net.num_arcs),
    )
    search.run(0, 0.0)
    if not search.best_choice and math.isinf(search.best_cost):
        return OracleResult(None, (), search.nodes)
    routes: list[Route] = [()] * instance.num_commodities
    for depth, k in enumerate(order):
        routes[k] = options[depth][search.best_choice[depth]][1]
    # Report the cost in commodity-id order so it does not depend on search order.
    total = 0.0
    for k, route in enumerate(routes):
        total += instance.commodities[k].demand * sum(costs[a] for a in route)
    return OracleResult(total, tuple(routes), search.nodes)
