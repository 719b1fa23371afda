"""Domain types for origin-destination integer multicommodity flow.

A :class:`Network` and an :class:`Instance` are immutable once built and may be
shared between solves.  A :class:`FlowState` holds one route per commodity and
keeps the aggregate per-arc load in sync as routes change.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInstanceError

# Route: ordered arc ids from origin to destination; () means unrouted.
Route = tuple[int, ...]

FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class Node:
    id: int


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    cost: float
    capacity: float

    def __post_init__(self) -> None:
        if self.tail == self.head:
            raise InvalidInstanceError(f"arc {self.id} is a self-loop on node {self.tail}")
        if not self.cost >= 0.0:
            raise InvalidInstanceError(f"arc {self.id} has negative cost {self.cost}")
        if not self.capacity > 0.0:
            raise InvalidInstanceError(f"arc {self.id} has non-positive capacity {self.capacity}")


@dataclass(frozen=True)
class Commodity:
    id: int
    origin: int
    destination: int
    demand: float

    def __post_init__(self) -> None:
        if self.origin == self.destination:
            raise InvalidInstanceError(f"commodity {self.id} has origin == destination")
        if not self.demand > 0.0:
            raise InvalidInstanceError(f"commodity {self.id} has non-positive demand {self.demand}")


class Network:
    """Directed graph with per-arc cost and capacity.

    Arc and node ids are dense indices.  Parallel arcs are rejected.  Numeric
    arc attributes are also exposed as read-only numpy arrays for the solver's
    vectorised pricing.
    """

    def __init__(self, num_nodes: int, arcs: Iterable[Arc]) -> None:
        if num_nodes < 0:
            raise InvalidInstanceError("negative node count")
        self.nodes: tuple[Node, ...] = tuple(Node(i) for i in range(num_nodes))
        self.arcs: tuple[Arc, ...] = tuple(arcs)
        out_adj: list[list[int]] = [[] for _ in range(num_nodes)]
        in_adj: list[list[int]] = [[] for _ in range(num_nodes)]
        seen: dict[tuple[int, int], int] = {}
        for index, arc in enumerate(self.arcs):
            if arc.id != index:
                raise InvalidInstanceError(f"arc ids must be dense: position {index} holds id {arc.id}")
            for end in (arc.tail, arc.head):
                if not 0 <= end < num_nodes:
                    raise InvalidInstanceError(f"arc {arc.id} references unknown node {end}")
            pair = (arc.tail, arc.head)
            if pair in seen:
                raise InvalidInstanceError(
                    f"parallel arcs {seen[pair]} and {arc.id} both join {arc.tail}->{arc.head}"
                )
            seen[pair] = arc.id
            out_adj[arc.tail].append(arc.id)
            in_adj[arc.head].append(arc.id)
        self.out_adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in out_adj)
        self.in_adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in in_adj)
        self._pairs = seen

        self.tails = self._frozen([a.tail for a in self.arcs], np.int64)
        self.heads = self._frozen([a.head for a in self.arcs], np.int64)
        self.costs = self._frozen([a.cost for a in self.arcs], np.float64)
        self.capacities = self._frozen([a.capacity for a in self.arcs], np.float64)
        # Plain lists are markedly faster than numpy scalars inside Dijkstra.
        self.head_list: list[int] = self.heads.tolist()

    @staticmethod
    def _frozen(values: list, dtype) -> np.ndarray:
        arr = np.asarray(values, dtype=dtype)
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_arrays(
        cls,
        num_nodes: int,
        tails: Sequence[int],
        heads: Sequence[int],
        costs: Sequence[float],
        capacities: Sequence[float],
    ) -> Network:
        arcs = [
            Arc(i, int(t), int(h), float(c), float(u))
            for i, (t, h, c, u) in enumerate(zip(tails, heads, costs, capacities, strict=True))
        ]
        return cls(num_nodes, arcs)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def arc_between(self, tail: int, head: int) -> int | None:
        return self._pairs.get((tail, head))

    def with_capacities(self, capacities: Sequence[float]) -> Network:
        return Network.from_arrays(self.num_nodes, self.tails, self.heads, self.costs, capacities)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.num_nodes == other.num_nodes and self.arcs == other.arcs

    def __hash__(self) -> int:
        return hash((self.num_nodes, self.arcs))

    def __repr__(self) -> str:
        return f"Network(nodes={self.num_nodes}, arcs={self.num_arcs})"


@dataclass(frozen=True, eq=True)
class Instance:
    network: Network
    commodities: tuple[Commodity, ...]
    # Known-feasible routing, when the instance came from the generator.
    certificate: tuple[Route, ...] | None = field(default=None, compare=True)

    def __post_init__(self) -> None:
        object.__setattr__(self, "commodities", tuple(self.commodities))
        n = self.network.num_nodes
        for index, com in enumerate(self.commodities):
            if com.id != index:
                raise InvalidInstanceError(f"commodity ids must be dense: position {index} holds id {com.id}")
            if not (0 <= com.origin < n and 0 <= com.destination < n):
                raise InvalidInstanceError(f"commodity {com.id} references an unknown node")
        if self.certificate is not None:
            cert = tuple(tuple(int(a) for a in r) for r in self.certificate)
            if len(cert) != len(self.commodities):
                raise InvalidInstanceError("certificate must hold one route per commodity")
            object.__setattr__(self, "certificate", cert)

    @property
    def demands(self) -> np.ndarray:
        return np.array([c.demand for c in self.commodities], dtype=np.float64)

    @property
    def num_commodities(self) -> int:
        return len(self.commodities)


def validate_route(network: Network, commodity: Commodity, route: Sequence[int]) -> bool:
    """True if ``route`` is empty or a simple origin-to-destination path.

    Raises :class:`InvalidInstanceError` for arc ids that do not exist.
    """
    arcs = network.arcs
    for a in route:
        if not 0 <= a < len(arcs):
            raise InvalidInstanceError(f"route references unknown arc {a}")
    if not route:
        return True
    if len(route) > network.num_nodes - 1:
        return False
    node = commodity.origin
    visited = {node}
    for a in route:
        arc = arcs[a]
        if arc.tail != node:
            return False
        node = arc.head
        if node in visited:
            return False
        visited.add(node)
    return node == commodity.destination


class FlowState:
    """Current route per commodity plus the aggregate load on every arc.

    ``arc_load[a]`` is the total demand of commodities whose route uses ``a``.
    It is updated incrementally by :meth:`set_route`.
    """

    def __init__(self, instance: Instance, routes: Sequence[Sequence[int]] | None = None) -> None:
        self.instance = instance
        self.network = instance.network
        self._demands = [c.demand for c in instance.commodities]
        self.routes: list[Route] = [()] * instance.num_commodities
        self.arc_load = np.zeros(instance.network.num_arcs, dtype=np.float64)
        if routes is not None:
            if len(routes) != instance.num_commodities:
                raise InvalidInstanceError("need exactly one route per commodity")
            for k, route in enumerate(routes):
                self.set_route(k, route)

    def set_route(self, k: int, route: Sequence[int]) -> None:
        new = tuple(int(a) for a in route)
        d = self._demands[k]
        old = self.routes[k]
        if old:
            self.arc_load[list(old)] -= d
        if new:
            self.arc_load[list(new)] += d
        self.routes[k] = new

    def recomputed_load(self) -> np.ndarray:
        load = np.zeros_like(self.arc_load)
        for k, route in enumerate(self.routes):
            for a in route:
                load[a] += self._demands[k]
        return load

    def residuals(self, k: int) -> np.ndarray:
        """Residual capacity of every arc as seen by commodity ``k``."""
        r = self.network.capacities - self.arc_load
        route = self.routes[k]
        if route:
            r[list(route)] += self._demands[k]
        return r

    def copy(self) -> FlowState:
        other = FlowState.__new__(FlowState)
        other.instance = self.instance
        other.network = self.network
        other._demands = self._demands
        other.routes = list(self.routes)
        other.arc_load = self.arc_load.copy()
        return other


def residual_capacity(state: FlowState, arc: Arc, commodity: Commodity) -> float:
    """Capacity of ``arc`` left over by every commodity other than ``commodity``.

    May be negative when the arc is overloaded.
    """
    r = arc.capacity - state.arc_load[arc.id]
    if arc.id in state.routes[commodity.id]:
        r += commodity.demand
    return float(r)


def violated_arcs(state: FlowState) -> np.ndarray:
    caps = state.network.capacities
    return np.flatnonzero(state.arc_load > caps + FEASIBILITY_RTOL * caps)


def capacity_feasible(state: FlowState) -> bool:
    """Every commodity routed and no arc load above its capacity."""
    if any(not r for r in state.routes):
        return False
    return violated_arcs(state).size == 0


def total_cost(state: FlowState, network: Network | None = None) -> float:
    network = network or state.network
    costs = network.arcs
    total = 0.0
    for k, route in enumerate(state.routes):
        if route:
            total += state._demands[k] * sum(costs[a].cost for a in route)
    return total
