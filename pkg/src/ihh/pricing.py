"""Market pricing of arcs and the hurdle-multiplier schedule.

Scalar functions mirror the cost definitions one arc at a time; the
``*_costs`` helpers evaluate the same quantities for every arc at once and are
what the solver uses in its inner loop.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InvalidInstanceError
from .model import Arc, Commodity, FlowState, Instance, residual_capacity

HM_EXPONENT = math.e
DEFAULT_LAMBDA0 = 43
DEFAULT_LAMBDA1 = 10
PRICE_CAP = 1e200


@dataclass(frozen=True)
class IhhParams:
    beta: float
    mu: float
    pi: float
    lambda0: int = DEFAULT_LAMBDA0
    lambda1: int = DEFAULT_LAMBDA1
    # Infeasibility sentinel; None means "max(cost) * |N|" of the instance solved.
    big_m: float | None = None

    def __post_init__(self) -> None:
        for name in ("beta", "mu", "pi"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite real, got {value}")
        if int(self.lambda0) != self.lambda0 or self.lambda0 < 1:
            raise ValueError(f"lambda0 must be a positive integer, got {self.lambda0}")
        if int(self.lambda1) != self.lambda1 or self.lambda1 < 0:
            raise ValueError(f"lambda1 must be a nonnegative integer, got {self.lambda1}")
        if not self.lambda1 < self.lambda0:
            raise ValueError("lambda1 must be smaller than lambda0")
        if self.big_m is not None and not (self.big_m > 0.0 and math.isfinite(self.big_m)):
            raise ValueError("big_m must be a positive finite real")

    def for_instance(self, instance: Instance) -> IhhParams:
        """Return params with ``big_m`` filled in and checked against ``instance``."""
        floor = minimum_big_m(instance)
        if self.big_m is None:
            return replace(self, big_m=max(floor, 1.0))
        if self.big_m < floor:
            raise ValueError(f"big_m={self.big_m} is below max(cost)*|N|={floor}")
        return self


def minimum_big_m(instance: Instance) -> float:
    net = instance.network
    return float(net.costs.max(initial=0.0)) * net.num_nodes


def scarcity_cost(params: IhhParams, residual: float, demand: float) -> float:
    ratio = (params.beta + demand - residual) / params.beta
    if ratio <= 0.0:
        return 0.0
    try:
        return min(params.mu * ratio**params.pi, PRICE_CAP)
    except OverflowError:
        return PRICE_CAP


def market_cost(params: IhhParams, arc: Arc, residual: float, demand: float) -> float:
    return scarcity_cost(params, residual, demand) + arc.cost


def route_market_cost(params: IhhParams, state: FlowState, route: Sequence[int], commodity: Commodity) -> float:
    arcs = state.network.arcs
    total = 0.0
    for a in route:
        r = residual_capacity(state, arcs[a], commodity)
        total += market_cost(params, arcs[a], r, commodity.demand)
    return total


def feasible_arc_cost(params: IhhParams, state: FlowState, arc: Arc, commodity: Commodity) -> float:
    if residual_capacity(state, arc, commodity) - commodity.demand >= 0.0:
        return arc.cost
    return params.big_m


def feasible_route_cost(params: IhhParams, state: FlowState, route: Sequence[int], commodity: Commodity) -> float:
    arcs = state.network.arcs
    total = 0.0
    for a in route:
        total += feasible_arc_cost(params, state, arcs[a], commodity)
    return total


def market_costs(params: IhhParams, state: FlowState, commodity: Commodity) -> np.ndarray:
    """Market cost of every arc for ``commodity`` under ``state``."""
    r = state.residuals(commodity.id)
    ratio = (params.beta + commodity.demand - r) / params.beta
    np.maximum(ratio, 0.0, out=ratio)
    with np.errstate(over="ignore"):
        scarcity = params.mu * np.power(ratio, params.pi)
    # Overflowed prices would poison path sums; cap far above any real route cost.
    np.minimum(scarcity, PRICE_CAP, out=scarcity)
    return state.network.costs + scarcity


def feasible_costs(params: IhhParams, state: FlowState, commodity: Commodity) -> np.ndarray:
    r = state.residuals(commodity.id)
    return np.where(r - commodity.demand >= 0.0, state.network.costs, params.big_m)


def hurdle_multiplier(params: IhhParams, lambda_k: int) -> float:
    """Fraction of the incumbent's cost a new route must undercut.

    1 below ``lambda1`` reroutes, then decays to 0 at ``lambda0 - 1`` and stays
    there.
    """
    if lambda_k < params.lambda1:
        return 1.0
    span = params.lambda0 - params.lambda1 - 1
    progress = lambda_k - params.lambda1
    if span <= 0 or progress >= span:
        return 0.0
    return min(1.0, max(0.0, 1.0 - (progress / span) ** HM_EXPONENT))


def _geometric_mean(values: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(values))))


def default_params(instance: Instance) -> IhhParams:
    """Parameter defaults derived from the instance's arc and demand data."""
    net = instance.network
    if net.num_arcs == 0:
        raise InvalidInstanceError("cannot derive parameters for a network without arcs")
    positive_costs = net.costs[net.costs > 0.0]
    if positive_costs.size == 0:
        raise InvalidInstanceError("all arc costs are zero; market price scale is undefined")
    beta = math.sqrt(2.0) / 2.0 * _geometric_mean(net.capacities)
    if instance.num_commodities:
        beta = max(beta, _geometric_mean(instance.demands))
    mu = _geometric_mean(positive_costs) * math.sqrt(math.e)
    return IhhParams(
        beta=beta,
        mu=mu,
        pi=math.e**math.e,
        lambda0=DEFAULT_LAMBDA0,
        lambda1=DEFAULT_LAMBDA1,
        big_m=minimum_big_m(instance),
    )
