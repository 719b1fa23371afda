"""Random instance generator.

Nodes are scattered in the unit square and arcs drawn with probability that
decays with distance, giving a mesh.  Arc costs follow Euclidean length,
rescaled to a requested minimum and 90th percentile.  Each commodity is
routed on a path that is shortest under random integer lengths, and arc
capacities are set to exactly the demand those paths carry, so the instance
always has a known feasible routing (its certificate).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.csgraph import dijkstra as all_pairs_dijkstra

from .exceptions import GeneratorError
from .model import Commodity, Instance, Network, Route
from .shortest_path import dijkstra

RANDOM_LENGTH_MAX = 10_000
MAX_FIT_ROUNDS = 200
MAX_TOPOLOGY_ATTEMPTS = 20
P90_RTOL = 1e-4
COST_DECIMALS = 1
DEMAND_DECIMALS = 1


@dataclass(frozen=True)
class GenSpec:
    num_nodes: int = 30
    num_arcs: int = 90
    num_commodities: int = 112
    cost_min: float = 10.0
    cost_p90: float = 2000.0
    demand_min: float = 5.0
    demand_max: float = 25.0
    hub_fraction: float = 0.0
    hub_commodity_fraction: float = 0.0
    distance_decay_exponent: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        n = self.num_nodes
        if n < 2:
            raise GeneratorError("need at least two nodes")
        if self.num_arcs < 1 or self.num_commodities < 0:
            raise GeneratorError("arc count must be positive and commodity count nonnegative")
        if self.num_arcs > n * (n - 1):
            raise GeneratorError(f"{self.num_arcs} arcs exceed the {n * (n - 1)} possible without parallel arcs")
        if self.num_arcs < n:
            raise GeneratorError(f"{self.num_arcs} arcs cannot make {n} nodes strongly connected")
        if not 0.0 < self.cost_min < self.cost_p90:
            raise GeneratorError("need 0 < cost_min < cost_p90")
        if not 0.0 < self.demand_min <= self.demand_max:
            raise GeneratorError("need 0 < demand_min <= demand_max")
        if not (0.0 <= self.hub_fraction <= 1.0 and 0.0 <= self.hub_commodity_fraction <= 1.0):
            raise GeneratorError("hub fractions must lie in [0, 1]")
        if not self.distance_decay_exponent > 0.0:
            raise GeneratorError("distance_decay_exponent must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise GeneratorError("seed must fit in an unsigned 64-bit integer")
        if self.num_hub_commodities > 0 and self.num_hubs < 2:
            raise GeneratorError(f"hub commodities requested but only {self.num_hubs} hub(s) designated")

    @property
    def num_hubs(self) -> int:
        return int(round(self.hub_fraction * self.num_nodes))

    @property
    def num_hub_commodities(self) -> int:
        return int(round(self.hub_commodity_fraction * self.num_commodities))


def _percentile90(values: np.ndarray) -> float:
    return float(np.percentile(values, 90.0))


def is_strongly_connected(num_nodes: int, tails: Sequence[int], heads: Sequence[int]) -> bool:
    if num_nodes <= 1:
        return True
    graph = csr_matrix((np.ones(len(tails)), (tails, heads)), shape=(num_nodes, num_nodes))
    count, _ = connected_components(graph, directed=True, connection="strong")
    return count == 1


def _scc_labels(num_nodes: int, arcs: list[tuple[int, int]]) -> tuple[int, np.ndarray]:
    t = [a[0] for a in arcs]
    h = [a[1] for a in arcs]
    graph = csr_matrix((np.ones(len(arcs)), (t, h)), shape=(num_nodes, num_nodes))
    return connected_components(graph, directed=True, connection="strong")


def dominated_arcs(num_nodes: int, tails: Sequence[int], heads: Sequence[int], costs: Sequence[float]) -> list[int]:
    """Arcs whose endpoints are joined by a strictly cheaper path."""
    tails = np.asarray(tails)
    heads = np.asarray(heads)
    costs = np.asarray(costs, dtype=np.float64)
    # csgraph drops explicit zeros; nudge them to a tiny positive weight.
    weights = np.where(costs > 0.0, costs, 1e-300)
    graph = csr_matrix((weights, (tails, heads)), shape=(num_nodes, num_nodes))
    sources = np.unique(tails)
    dist = all_pairs_dijkstra(graph, directed=True, indices=sources)
    row = {int(s): i for i, s in enumerate(sources)}
    rows = np.array([row[int(t)] for t in tails], dtype=np.int64)
    best = dist[rows, heads]
    return np.flatnonzero(best < costs - 1e-9 * np.maximum(costs, 1.0)).tolist()


class _ArcSampler:
    """Draws distinct directed node pairs with probability ~ distance**(-decay)."""

    def __init__(self, positions: np.ndarray, decay: float, rng: np.random.Generator) -> None:
        n = len(positions)
        self.n = n
        self.rng = rng
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
        self.tails = ii
        self.heads = jj
        self.lengths = np.hypot(*(positions[ii] - positions[jj]).T)
        self.weights = np.maximum(self.lengths, 1e-12) ** (-decay)

    def length(self, tail: int, head: int) -> float:
        # Pair index in row-major order with the diagonal removed.
        return float(self.lengths[tail * (self.n - 1) + (head if head < tail else head - 1)])

    def sample(self, count: int) -> list[tuple[int, int]]:
        p = self.weights / self.weights.sum()
        picks = self.rng.choice(len(self.weights), size=count, replace=False, p=p)
        return [(int(self.tails[i]), int(self.heads[i])) for i in picks]


def _repair_connectivity(arcs: list[tuple[int, int]], target: int, sampler: _ArcSampler) -> list[tuple[int, int]]:
    """Add shortest bridging arcs until strongly connected, then trim the longest surplus."""
    n = sampler.n
    arcs = list(arcs)
    present = set(arcs)
    while True:
        count, labels = _scc_labels(n, arcs)
        if count == 1:
            break
        out_deg = np.zeros(count, dtype=bool)
        in_deg = np.zeros(count, dtype=bool)
        for t, h in arcs:
            if labels[t] != labels[h]:
                out_deg[labels[t]] = True
                in_deg[labels[h]] = True
        new_arcs: list[tuple[int, int]] = []
        for comp in range(count):
            members = np.flatnonzero(labels == comp)
            outside = np.flatnonzero(labels != comp)
            for needs, outgoing in ((not out_deg[comp], True), (not in_deg[comp], False)):
                if not needs:
                    continue
                best = None
                for u in members.tolist():
                    for v in outside.tolist():
                        pair = (u, v) if outgoing else (v, u)
                        if pair in present:
                            continue
                        length = sampler.length(*pair)
                        if best is None or length < best[0]:
                            best = (length, pair)
                if best is None:
                    raise GeneratorError("cannot repair strong connectivity")
                if best[1] not in present:
                    present.add(best[1])
                    new_arcs.append(best[1])
        arcs.extend(new_arcs)
    if len(arcs) > target:
        by_length = sorted(arcs, key=lambda pair: (-sampler.length(*pair), pair))
        for pair in by_length:
            if len(arcs) <= target:
                break
            trial = [a for a in arcs if a != pair]
            if is_strongly_connected(n, [a[0] for a in trial], [a[1] for a in trial]):
                arcs = trial
        if len(arcs) > target:
            raise GeneratorError(f"{target} arcs are too few to keep the network strongly connected")
    return arcs


def _tour_topology(target: int, sampler: _ArcSampler) -> list[tuple[int, int]]:
    """A nearest-neighbour tour (a strongly connected cycle) topped up with sampled arcs."""
    n = sampler.n
    order = [0]
    left = set(range(1, n))
    while left:
        here = order[-1]
        nxt = min(left, key=lambda v: (sampler.length(here, v), v))
        order.append(nxt)
        left.remove(nxt)
    arcs = [(order[i], order[(i + 1) % n]) for i in range(n)]
    present = set(arcs)
    for pair in sampler.sample(n * (n - 1)):
        if len(arcs) >= target:
            break
        if pair not in present:
            present.add(pair)
            arcs.append(pair)
    return arcs


def sample_topology(target: int, sampler: _ArcSampler) -> list[tuple[int, int]]:
    """Exactly ``target`` distinct arcs forming a strongly connected network.

    Greedy trimming after repair can get stuck above ``target`` when the count
    is close to the minimum; a few fresh samples are tried before falling back
    to a tour-based construction, which always fits.
    """
    for _ in range(MAX_TOPOLOGY_ATTEMPTS):
        try:
            return sorted(_repair_connectivity(sampler.sample(target), target, sampler))
        except GeneratorError:
            continue
    return sorted(_tour_topology(target, sampler))


def _stretch(values: np.ndarray, cost_min: float, cost_p90: float) -> np.ndarray:
    """Affine map fixing the minimum at ``cost_min`` and the 90th percentile at ``cost_p90``."""
    lo = float(values.min())
    p90 = _percentile90(values)
    if not p90 > lo:
        raise GeneratorError("arc lengths are too uniform to match both cost targets")
    return cost_min + (values - lo) * ((cost_p90 - cost_min) / (p90 - lo))


def _closure(num_nodes: int, tails: np.ndarray, heads: np.ndarray, costs: np.ndarray) -> np.ndarray:
    """Lower every arc cost to the cheapest path between its endpoints."""
    graph = csr_matrix((costs, (tails, heads)), shape=(num_nodes, num_nodes))
    sources = np.unique(tails)
    dist = all_pairs_dijkstra(graph, directed=True, indices=sources)
    row = np.searchsorted(sources, tails)
    return np.minimum(costs, dist[row, heads])


def fit_costs(
    num_nodes: int,
    tails: Sequence[int],
    heads: Sequence[int],
    lengths: np.ndarray,
    cost_min: float,
    cost_p90: float,
) -> np.ndarray:
    """Arc costs from Euclidean lengths, rounded to tenths.

    The minimum cost is exactly ``cost_min``, the 90th percentile is
    ``cost_p90`` to within rounding, and no arc is undercut by a path between
    its endpoints.  Stretching the lengths affinely can make a two-hop detour
    cheaper than a long arc, so stretching alternates with lowering such arcs
    to their detour cost until the percentile settles.
    """
    tails = np.asarray(tails)
    heads = np.asarray(heads)
    costs = np.round(_stretch(np.asarray(lengths, dtype=np.float64), cost_min, cost_p90), COST_DECIMALS)
    tolerance = max(P90_RTOL * cost_p90, 10.0 ** -COST_DECIMALS)
    for _ in range(MAX_FIT_ROUNDS):
        costs = np.round(_closure(num_nodes, tails, heads, costs), COST_DECIMALS)
        if abs(_percentile90(costs) - cost_p90) <= tolerance:
            return costs
        costs = np.round(_stretch(costs, cost_min, cost_p90), COST_DECIMALS)
    raise GeneratorError("arc costs did not settle on the requested 90th percentile")


def assign_capacities(
    network: Network,
    commodities: Sequence[Commodity],
    seed: int | np.random.Generator,
    floor: float | None = None,
) -> tuple[np.ndarray, tuple[Route, ...]]:
    """Capacities that exactly carry each commodity on a random-shortest path.

    Returns the per-arc capacities and the certificate routing.  Arcs that no
    certificate path uses get capacity ``floor`` (default: smallest demand).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(int(seed)))
    load = np.zeros(network.num_arcs)
    routes: list[Route] = []
    for com in commodities:
        lengths = rng.integers(1, RANDOM_LENGTH_MAX, size=network.num_arcs, endpoint=True)
        result = dijkstra(network, com.origin, com.destination, lengths.astype(np.float64).tolist())
        if not result.route:
            raise GeneratorError(f"commodity {com.id} has no path; network is not strongly connected")
        routes.append(result.route)
        for a in result.route:
            load[a] += com.demand
    if floor is None:
        floor = min((c.demand for c in commodities), default=1.0)
    caps = np.where(load > 0.0, np.round(load, DEMAND_DECIMALS), floor)
    # Rounding to tenths must never cut below the certificate's load.
    caps = np.where(caps < load, load, caps)
    return caps, tuple(routes)


def _sample_commodities(spec: GenSpec, rng: np.random.Generator) -> list[Commodity]:
    n, k_total = spec.num_nodes, spec.num_commodities
    hubs = np.sort(rng.choice(n, size=spec.num_hubs, replace=False)) if spec.num_hubs else np.array([], dtype=int)
    hub_ids = set(rng.choice(k_total, size=spec.num_hub_commodities, replace=False).tolist()) if k_total else set()
    demands = np.round(rng.uniform(spec.demand_min, spec.demand_max, size=k_total), DEMAND_DECIMALS)
    demands = np.clip(demands, spec.demand_min, spec.demand_max)
    commodities = []
    for k in range(k_total):
        pool = hubs if k in hub_ids else np.arange(n)
        origin = int(pool[rng.integers(len(pool))])
        others = pool[pool != origin]
        destination = int(others[rng.integers(len(others))])
        commodities.append(Commodity(k, origin, destination, float(demands[k])))
    return commodities


def generate(spec: GenSpec) -> Instance:
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    n = spec.num_nodes
    positions = rng.random((n, 2))
    sampler = _ArcSampler(positions, spec.distance_decay_exponent, rng)

    arcs = sample_topology(spec.num_arcs, sampler)
    tails = [a[0] for a in arcs]
    heads = [a[1] for a in arcs]
    lengths = np.array([sampler.length(t, h) for t, h in arcs])
    costs = fit_costs(n, tails, heads, lengths, spec.cost_min, spec.cost_p90)

    placeholder = Network.from_arrays(n, tails, heads, costs.tolist(), [1.0] * len(arcs))
    commodities = _sample_commodities(spec, rng)
    caps, certificate = assign_capacities(placeholder, commodities, rng, floor=spec.demand_min)
    network = placeholder.with_capacities(caps.tolist())
    return Instance(network, tuple(commodities), certificate)


def instance_summary(instance: Instance) -> dict[str, float]:
    """Group-characteristics style summary of an instance."""
    net = instance.network
    demands = instance.demands
    caps = net.capacities
    mean_d = float(demands.mean()) if demands.size else 0.0
    mean_u = float(caps.mean()) if caps.size else 0.0
    return {
        "nodes": net.num_nodes,
        "arcs": net.num_arcs,
        "commodities": instance.num_commodities,
        "binary_variables": net.num_arcs * instance.num_commodities,
        "mean_cost": float(net.costs.mean()) if caps.size else 0.0,
        "min_cost": float(net.costs.min()) if caps.size else 0.0,
        "p90_cost": _percentile90(net.costs) if caps.size else 0.0,
        "mean_demand": mean_d,
        "mean_capacity": mean_u,
        "degree": 2.0 * net.num_arcs / net.num_nodes if net.num_nodes else 0.0,
        "demand_capacity_ratio": float(demands.sum() / caps.sum()) if caps.size else math.nan,
        "mean_demand_mean_capacity_ratio": mean_d / mean_u if mean_u else math.nan,
    }
