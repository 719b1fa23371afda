"""The invisible-hand heuristic.

Commodities start on their cheapest original-cost paths.  If that overloads
any arc, each commodity in turn (random order per pass) re-prices the network
at current market cost and moves when a strictly cheaper route clears the
hurdle.  Passes repeat until nobody moves.  A final pass then moves
commodities onto cheaper routes that have room for them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .model import FlowState, Instance, capacity_feasible, total_cost, violated_arcs
from .pricing import IhhParams, feasible_costs, hurdle_multiplier, market_costs
from .shortest_path import dijkstra, path_cost, sp_original

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SolveConfig:
    params: IhhParams
    seed: int = 0
    # Safety valve only; the hurdle schedule already bounds the work.
    max_main_iterations: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.max_main_iterations is not None and self.max_main_iterations < 1:
            raise ValueError("max_main_iterations must be positive")


@dataclass
class SolveReport:
    final_state: FlowState
    total_cost: float = 0.0
    feasible: bool = False
    cost_before_feaspath: float = 0.0
    feasible_before_feaspath: bool = False
    violated_arcs_before_feaspath: int = 0
    violated_arcs_after_feaspath: int = 0
    violated_arc_fraction_before_feaspath: float = 0.0
    trivially_feasible: bool = False
    hurdle_activations: int = 0
    reroutes_per_commodity: list[int] = field(default_factory=list)
    feaspath_reroutes_per_commodity: list[int] = field(default_factory=list)
    main_loop_reroutes: int = 0
    feaspath_reroutes: int = 0
    main_loop_iterations: int = 0
    feaspath_iterations: int = 0
    wall_time: float = 0.0
    # (phase, pass index, commodity) for every accepted route change.
    trace: list[tuple[str, int, int]] = field(default_factory=list)

    def to_record(self, instance_id: str = "", seed: int | None = None, **extra: Any) -> dict[str, Any]:
        record: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "instance": instance_id,
            "seed": seed,
            "cost": self.total_cost,
            "feasible": self.feasible,
            "solve_seconds": self.wall_time,
            "cost_before_feaspath": self.cost_before_feaspath,
            "feasible_before_feaspath": self.feasible_before_feaspath,
            "violated_arcs_before_feaspath": self.violated_arcs_before_feaspath,
            "violated_arcs_after_feaspath": self.violated_arcs_after_feaspath,
            "violated_arc_fraction_before_feaspath": self.violated_arc_fraction_before_feaspath,
            "trivially_feasible": self.trivially_feasible,
            "hurdle_activations": self.hurdle_activations,
            "main_loop_iterations": self.main_loop_iterations,
            "main_loop_reroutes": self.main_loop_reroutes,
            "max_reroutes_per_commodity": max(self.reroutes_per_commodity, default=0),
            "feaspath_iterations": self.feaspath_iterations,
            "feaspath_reroutes": self.feaspath_reroutes,
        }
        record.update(extra)
        return record


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def shuffled(n: int, rng: np.random.Generator) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)`` driven by one block of uniforms."""
    order = list(range(n))
    draws = rng.random(n).tolist()
    for i in range(n - 1, 0, -1):
        j = int(draws[i] * (i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def sp_solve(instance: Instance) -> FlowState:
    """Route every commodity on its cheapest path, ignoring capacities."""
    state = FlowState(instance)
    for com in instance.commodities:
        result = sp_original(instance.network, com)
        if result.route:
            state.set_route(com.id, result.route)
    return state


def route_decision(commodity, lambda_k, state, params, network, report=None) -> bool:
    """Move ``commodity`` to its cheapest market-cost route if it clears the hurdle.

    Returns True when the route changed.  When ``report`` is given, a rejection
    caused only by the hurdle (the new route was cheaper, but not by enough) is
    counted in ``report.hurdle_activations``.
    """
    costs = market_costs(params, state, commodity).tolist()
    new = dijkstra(network, commodity.origin, commodity.destination, costs)
    if not new.route:
        return False
    incumbent = path_cost(state.routes[commodity.id], costs)
    if new.cost < hurdle_multiplier(params, lambda_k) * incumbent:
        state.set_route(commodity.id, new.route)
        return True
    if report is not None and new.cost < incumbent:
        report.hurdle_activations += 1
    return False


def main_loop(
    instance: Instance,
    state: FlowState,
    config: SolveConfig,
    report: SolveReport,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Repeat randomized passes until a pass changes no route.

    Returns the per-commodity change counts.
    """
    rng = rng if rng is not None else make_rng(config.seed)
    params = config.params
    network = instance.network
    commodities = instance.commodities
    lambdas = [0] * len(commodities)
    more = True
    while more:
        if config.max_main_iterations is not None and report.main_loop_iterations >= config.max_main_iterations:
            break
        more = False
        pass_index = report.main_loop_iterations
        for k in shuffled(len(commodities), rng):
            if route_decision(commodities[k], lambdas[k], state, params, network, report):
                lambdas[k] += 1
                report.main_loop_reroutes += 1
                report.trace.append(("main", pass_index, k))
                more = True
        report.main_loop_iterations += 1
    report.reroutes_per_commodity = lambdas
    return lambdas


def feas_path(
    instance: Instance,
    state: FlowState,
    params: IhhParams,
    config: SolveConfig,
    report: SolveReport,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Move commodities onto cheaper original-cost routes that have room for them.

    Arcs without enough residual capacity for the commodity are priced at
    ``big_m``, so an accepted route never overloads an arc.  Unrouted
    commodities stay unrouted and routed ones are never un-routed.
    """
    rng = rng if rng is not None else make_rng(config.seed)
    if params.big_m is None:
        params = params.for_instance(instance)
    big_m = params.big_m
    network = instance.network
    commodities = instance.commodities
    lambdas = [0] * len(commodities)
    more = True
    while more:
        more = False
        pass_index = report.feaspath_iterations
        for k in shuffled(len(commodities), rng):
            incumbent_route = state.routes[k]
            if not incumbent_route:
                continue
            com = commodities[k]
            costs = feasible_costs(params, state, com).tolist()
            new = dijkstra(network, com.origin, com.destination, costs)
            if not new.route:
                continue
            incumbent = path_cost(incumbent_route, costs)
            if new.cost < min(big_m, hurdle_multiplier(params, lambdas[k]) * incumbent):
                lambdas[k] += 1
                state.set_route(k, new.route)
                report.feaspath_reroutes += 1
                report.trace.append(("feaspath", pass_index, k))
                more = True
        report.feaspath_iterations += 1
    report.feaspath_reroutes_per_commodity = lambdas
    return lambdas


def solve(instance: Instance, config: SolveConfig) -> SolveReport:
    start = time.perf_counter()
    params = config.params.for_instance(instance)
    config = SolveConfig(params, config.seed, config.max_main_iterations)
    state = sp_solve(instance)
    report = SolveReport(final_state=state)
    report.reroutes_per_commodity = [0] * instance.num_commodities
    report.feaspath_reroutes_per_commodity = [0] * instance.num_commodities

    if capacity_feasible(state):
        report.trivially_feasible = True
    else:
        rng = make_rng(config.seed)
        main_loop(instance, state, config, report, rng)
        report.violated_arcs_before_feaspath = int(violated_arcs(state).size)
        report.cost_before_feaspath = total_cost(state)
        report.feasible_before_feaspath = capacity_feasible(state)
        feas_path(instance, state, params, config, report, rng)

    report.total_cost = total_cost(state)
    report.feasible = capacity_feasible(state)
    report.violated_arcs_after_feaspath = int(violated_arcs(state).size)
    if report.trivially_feasible:
        report.cost_before_feaspath = report.total_cost
        report.feasible_before_feaspath = True
    if instance.network.num_arcs:
        report.violated_arc_fraction_before_feaspath = report.violated_arcs_before_feaspath / instance.network.num_arcs
    report.wall_time = time.perf_counter() - start
    return report
