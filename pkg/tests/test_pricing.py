from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build
from ihh.exceptions import InvalidInstanceError
from ihh.model import FlowState
from ihh.pricing import (
    PRICE_CAP,
    IhhParams,
    default_params,
    feasible_arc_cost,
    feasible_costs,
    feasible_route_cost,
    hurdle_multiplier,
    market_cost,
    market_costs,
    minimum_big_m,
    route_market_cost,
    scarcity_cost,
)

P = IhhParams(beta=10.0, mu=100.0, pi=2.0, big_m=1e6)

# Independent closed-form evaluations, frozen.
HM_26 = 0.848044776742087  # 1 - 0.5**e
UNIFORM_BETA = 70.71067811865476  # sqrt(2)/2 * 100
UNIFORM_MU = 82.43606353500641  # 50 * sqrt(e)
E_TO_E = 15.154262241479259


class TestScarcity:
    def test_clamped_to_zero(self):
        assert scarcity_cost(P, residual=20.0, demand=5.0) == 0.0

    def test_ratio_one_gives_mu(self):
        assert scarcity_cost(P, residual=5.0, demand=5.0) == 100.0

    def test_empty_arc(self):
        assert scarcity_cost(P, residual=0.0, demand=5.0) == pytest.approx(225.0, rel=1e-12)

    def test_overflow_is_capped(self):
        steep = IhhParams(beta=1e-3, mu=1e3, pi=30.0)
        assert scarcity_cost(steep, residual=-1e9, demand=1.0) == PRICE_CAP

    @settings(max_examples=200, deadline=None)
    @given(
        r=st.floats(-500, 500),
        d=st.floats(0.1, 50),
        beta=st.floats(0.5, 200),
        pi=st.floats(1.0, 20.0),
    )
    def test_nonnegative_and_nonincreasing_in_residual(self, r, d, beta, pi):
        p = IhhParams(beta=beta, mu=3.0, pi=pi)
        assert scarcity_cost(p, r, d) >= 0.0
        assert scarcity_cost(p, r + 1.0, d) <= scarcity_cost(p, r, d)


class TestMarketCost:
    def test_no_scarcity(self):
        inst = build(2, [(0, 1, 10.0, 100.0)])
        assert market_cost(P, inst.network.arcs[0], residual=100.0, demand=5.0) == 10.0

    def test_adds_scarcity(self):
        inst = build(2, [(0, 1, 10.0, 100.0)])
        assert market_cost(P, inst.network.arcs[0], residual=0.0, demand=5.0) == pytest.approx(235.0)

    def test_plenty_of_room_is_original_cost(self):
        inst = build(2, [(0, 1, 7.5, 100.0)])
        assert market_cost(P, inst.network.arcs[0], residual=P.beta + 5.0, demand=5.0) == 7.5


class TestRouteMarketCost:
    def test_empty(self, bottleneck):
        state = FlowState(bottleneck)
        assert route_market_cost(P, state, (), bottleneck.commodities[0]) == 0.0

    def test_single_arc(self, bottleneck):
        state = FlowState(bottleneck, [(0, 1), (0, 1)])
        com = bottleneck.commodities[0]
        arc = bottleneck.network.arcs[0]
        # Residual for commodity 0 on arc 0: 10 - 7 = 3; scarcity 100*((10+6-3)/10)^2.
        assert route_market_cost(P, state, (0,), com) == pytest.approx(100.0 * 1.3**2 + arc.cost)

    def test_two_arcs_is_sum(self, bottleneck):
        state = FlowState(bottleneck, [(0, 1), (2, 3)])
        com = bottleneck.commodities[1]
        expected = sum(
            market_cost(P, bottleneck.network.arcs[a], state.residuals(1)[a], com.demand) for a in (2, 3)
        )
        assert route_market_cost(P, state, (2, 3), com) == pytest.approx(expected, rel=1e-15)

    def test_vector_matches_scalar(self, bottleneck):
        state = FlowState(bottleneck, [(0, 1), (0, 1)])
        for com in bottleneck.commodities:
            vec = market_costs(P, state, com)
            for a in range(4):
                assert vec[a] == pytest.approx(route_market_cost(P, state, (a,), com), rel=1e-12)


class TestFeasibleCost:
    def _arc_state(self, cap, others, d):
        inst = build(2, [(0, 1, 7.0, cap)], [(0, 1, d), (0, 1, others)])
        return inst, FlowState(inst, [(), (0,)])

    def test_exact_fit_qualifies(self):
        inst, state = self._arc_state(100.0, 50.0, 50.0)
        assert feasible_arc_cost(P, state, inst.network.arcs[0], inst.commodities[0]) == 7.0

    def test_one_short(self):
        inst, state = self._arc_state(100.0, 51.0, 50.0)
        assert feasible_arc_cost(P, state, inst.network.arcs[0], inst.commodities[0]) == P.big_m

    def test_negative_residual(self):
        inst, state = self._arc_state(50.0, 60.0, 0.5)
        assert feasible_arc_cost(P, state, inst.network.arcs[0], inst.commodities[0]) == P.big_m

    def test_route_sum(self):
        inst = build(4, [(0, 1, 1.0, 10.0), (1, 2, 2.0, 10.0), (2, 3, 3.0, 10.0)], [(0, 3, 4.0)])
        state = FlowState(inst)
        assert feasible_route_cost(P, state, (0, 1, 2), inst.commodities[0]) == 6.0
        assert feasible_route_cost(P, state, (), inst.commodities[0]) == 0.0

    def test_saturated_arc_reaches_big_m(self, bottleneck):
        state = FlowState(bottleneck, [(0, 1), (0, 1)])
        assert feasible_route_cost(P, state, (0, 1), bottleneck.commodities[0]) >= P.big_m

    def test_vector_matches_scalar(self, bottleneck):
        state = FlowState(bottleneck, [(0, 1), (2, 3)])
        for com in bottleneck.commodities:
            vec = feasible_costs(P, state, com)
            for arc in bottleneck.network.arcs:
                assert vec[arc.id] == feasible_arc_cost(P, state, arc, com)


class TestHurdle:
    def test_below_lambda1(self):
        assert hurdle_multiplier(P, 5) == 1.0

    def test_at_lambda0_minus_one(self):
        assert hurdle_multiplier(P, 42) == 0.0

    def test_midway(self):
        assert hurdle_multiplier(P, 26) == pytest.approx(HM_26, rel=1e-12)

    def test_at_lambda1_is_one(self):
        assert hurdle_multiplier(P, 10) == 1.0

    def test_beyond_lambda0(self):
        assert hurdle_multiplier(P, 100) == 0.0

    def test_monotone_and_bounded(self):
        values = [hurdle_multiplier(P, lam) for lam in range(60)]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestDefaults:
    def test_uniform_instance(self):
        inst = build(3, [(0, 1, 50.0, 100.0), (1, 2, 50.0, 100.0), (2, 0, 50.0, 100.0)], [(0, 2, 10.0), (1, 0, 10.0)])
        p = default_params(inst)
        assert p.beta == pytest.approx(UNIFORM_BETA, rel=1e-12)
        assert p.mu == pytest.approx(UNIFORM_MU, rel=1e-12)
        assert p.pi == pytest.approx(E_TO_E, rel=1e-12)
        assert (p.lambda0, p.lambda1) == (43, 10)
        assert p.big_m == 50.0 * 3

    def test_single_arc_single_commodity(self):
        p = default_params(build(2, [(0, 1, 1.0, 1.0)], [(0, 1, 1.0)]))
        assert p.beta == 1.0

    def test_zero_costs_are_skipped_in_mu(self):
        inst = build(3, [(0, 1, 0.0, 4.0), (1, 2, 8.0, 4.0)], [(0, 2, 1.0)])
        assert default_params(inst).mu == pytest.approx(8.0 * math.sqrt(math.e))

    def test_all_zero_costs_rejected(self):
        with pytest.raises(InvalidInstanceError):
            default_params(build(2, [(0, 1, 0.0, 4.0)]))

    def test_big_m_floor(self, bottleneck):
        assert minimum_big_m(bottleneck) == 5.0 * 4
        with pytest.raises(ValueError, match="below"):
            IhhParams(1.0, 1.0, 1.0, big_m=1.0).for_instance(bottleneck)
        filled = IhhParams(1.0, 1.0, 1.0).for_instance(bottleneck)
        assert filled.big_m == 20.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"beta": 0.0},
        {"mu": -1.0},
        {"pi": math.nan},
        {"lambda0": 5, "lambda1": 5},
        {"lambda1": -1},
        {"big_m": math.inf},
    ],
)
def test_param_validation(kwargs):
    base = {"beta": 1.0, "mu": 1.0, "pi": 1.0}
    base.update(kwargs)
    with pytest.raises(ValueError):
        IhhParams(**base)


def test_market_costs_never_overflow(bottleneck):
    steep = IhhParams(beta=1e-6, mu=1e6, pi=30.0)
    state = FlowState(bottleneck, [(0, 1), (0, 1)])
    costs = market_costs(steep, state, bottleneck.commodities[0])
    assert np.isfinite(costs).all()
