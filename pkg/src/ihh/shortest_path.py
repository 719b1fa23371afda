"""Single-pair Dijkstra with pluggable arc pricing.

A cost oracle maps a commodity to the cost of every arc for that commodity.
Three oracles are provided: original arc cost, market cost and feasible cost.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .exceptions import NegativeCostError
from .model import Commodity, FlowState, Network, Route
from .pricing import IhhParams, feasible_costs, market_costs


class CostOracle(Protocol):
    def __call__(self, commodity: Commodity) -> np.ndarray:
        """Return per-arc costs (indexed by arc id) for ``commodity``."""
        ...


@dataclass(frozen=True)
class PathResult:
    route: Route
    cost: float

    def __bool__(self) -> bool:
        return bool(self.route)


class OriginalCost:
    def __init__(self, network: Network) -> None:
        self.network = network

    def __call__(self, commodity: Commodity) -> np.ndarray:
        return self.network.costs


class MarketCost:
    def __init__(self, state: FlowState, params: IhhParams) -> None:
        self.state = state
        self.params = params

    def __call__(self, commodity: Commodity) -> np.ndarray:
        return market_costs(self.params, self.state, commodity)


class FeasibleCost:
    def __init__(self, state: FlowState, params: IhhParams) -> None:
        if params.big_m is None:
            raise ValueError("feasible pricing needs a concrete big_m; call params.for_instance() first")
        self.state = state
        self.params = params

    def __call__(self, commodity: Commodity) -> np.ndarray:
        return feasible_costs(self.params, self.state, commodity)


def path_cost(route: Route, arc_costs) -> float:
    """Sum ``arc_costs`` along ``route`` in traversal order."""
    total = 0.0
    for a in route:
        total += arc_costs[a]
    return total


def dijkstra(network: Network, origin: int, destination: int, arc_costs: list[float]) -> PathResult:
    """Cheapest ``origin`` to ``destination`` path under ``arc_costs``.

    Heap entries are ``(distance, node)`` so equal distances settle the lower
    node id first; a label is only replaced by a strictly shorter one.
    """
    n = network.num_nodes
    dist = [math.inf] * n
    parent = [-1] * n
    done = [False] * n
    out_adj = network.out_adjacency
    heads = network.head_list
    dist[origin] = 0.0
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == destination:
            break
        for a in out_adj[u]:
            v = heads[a]
            if done[v]:
                continue
            nd = d + arc_costs[a]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = a
                heapq.heappush(heap, (nd, v))
    if not done[destination] or origin == destination:
        return PathResult((), 0.0)
    route = []
    node = destination
    tails = network.arcs
    while node != origin:
        a = parent[node]
        route.append(a)
        node = tails[a].tail
    route.reverse()
    return PathResult(tuple(route), dist[destination])


def shortest_path(
    network: Network,
    origin: int,
    destination: int,
    oracle: CostOracle,
    commodity: Commodity,
) -> PathResult:
    """Minimum-cost simple path under ``oracle``; empty route if unreachable."""
    costs = np.asarray(oracle(commodity), dtype=np.float64)
    if costs.shape != (network.num_arcs,):
        raise ValueError(f"oracle returned {costs.shape} costs for {network.num_arcs} arcs")
    if costs.size and not costs.min() >= 0.0:
        raise NegativeCostError(f"oracle produced cost {costs.min()} (negative or NaN)")
    if costs.size and not np.isfinite(costs).all():
        raise NegativeCostError("oracle produced a non-finite cost")
    return dijkstra(network, origin, destination, costs.tolist())


def sp_original(network: Network, commodity: Commodity) -> PathResult:
    return shortest_path(network, commodity.origin, commodity.destination, OriginalCost(network), commodity)


def sp_market(network: Network, state: FlowState, params: IhhParams, commodity: Commodity) -> PathResult:
    return shortest_path(network, commodity.origin, commodity.destination, MarketCost(state, params), commodity)


def sp_feasible(network: Network, state: FlowState, params: IhhParams, commodity: Commodity) -> PathResult:
    return shortest_path(network, commodity.origin, commodity.destination, FeasibleCost(state, params), commodity)
