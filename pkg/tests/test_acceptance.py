"""Acceptance suite.

Every criterion is checked at its stated tolerance and prints one
``ACCEPTANCE <n> PASS|FAIL`` line to the terminal, so the verdicts show up in
``pytest -v`` output even when the test passes.  Run directly with
``python3 tests/test_acceptance.py`` for the summary alone.
"""

from __future__ import annotations

import math
import statistics
import sys
import time
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import pytest

from ihh.cli import VerificationError, verify_solution
from ihh.fileio import Solution
from ihh.generator import GenSpec, generate, is_strongly_connected
from ihh.model import FlowState, Instance, capacity_feasible
from ihh.oracle import exact_solve, lower_bound, simple_paths
from ihh.pricing import DEFAULT_LAMBDA0, IhhParams, default_params, feasible_costs, market_costs
from ihh.shortest_path import dijkstra, path_cost
from ihh.solver import SolveConfig, SolveReport, solve, sp_solve

A1 = GenSpec(num_nodes=30, num_arcs=90, num_commodities=112)
A1_INSTANCES = 20
A1_SEEDS = range(10)
A1_BASE_SEED = 1000
TIME_BUDGET = 1.0

TINY_TARGET = 100
TINY_SEEDS = range(3)
RATIO_FLOOR = 1.0 - 1e-9

SP_GRAPHS = 500
SP_RTOL = 1e-9

LADDER = (28, 56, 112, 224, 448)
LADDER_TOPOLOGIES = 3
LADDER_SEEDS = range(3)


def _report(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    capture = _CAPTURE.get("manager")
    if capture is not None:
        with capture.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


_CAPTURE: dict[str, object] = {}


@pytest.fixture(autouse=True)
def _expose_capture(request: pytest.FixtureRequest) -> None:
    _CAPTURE["manager"] = request.config.pluginmanager.getplugin("capturemanager")


@dataclass
class Run:
    instance_index: int
    seed: int
    report: SolveReport
    lower_bound: float


@lru_cache(maxsize=None)
def a1_instances() -> tuple[Instance, ...]:
    return tuple(generate(replace(A1, seed=A1_BASE_SEED + i)) for i in range(A1_INSTANCES))


@lru_cache(maxsize=None)
def a1_runs() -> tuple[Run, ...]:
    runs = []
    for i, inst in enumerate(a1_instances()):
        params = default_params(inst)
        lb = lower_bound(inst)
        for seed in A1_SEEDS:
            runs.append(Run(i, seed, solve(inst, SolveConfig(params, seed)), lb))
    return tuple(runs)


@lru_cache(maxsize=None)
def tiny_cases() -> tuple[tuple[Instance, float], ...]:
    """Congested, oracle-feasible instances with at most 8 nodes, 20 arcs, 6 commodities."""
    rng = np.random.Generator(np.random.PCG64(2024))
    cases = []
    seed = 0
    while len(cases) < TINY_TARGET:
        seed += 1
        n = int(rng.integers(4, 9))
        arcs = int(rng.integers(n + 2, min(20, n * (n - 1)) + 1))
        k = int(rng.integers(2, 7))
        inst = generate(GenSpec(num_nodes=n, num_arcs=arcs, num_commodities=k, seed=seed))
        if capacity_feasible(sp_solve(inst)):
            continue
        result = exact_solve(inst)
        if result.feasible:
            cases.append((inst, result.optimal_cost))
    return tuple(cases)


@lru_cache(maxsize=None)
def tiny_runs() -> tuple[tuple[int, int, SolveReport], ...]:
    out = []
    for i, (inst, _) in enumerate(tiny_cases()):
        params = default_params(inst)
        for seed in TINY_SEEDS:
            out.append((i, seed, solve(inst, SolveConfig(params, seed))))
    return tuple(out)


# ---------------------------------------------------------------- 1


def test_criterion_1_feasibility_at_a1_scale():
    runs = a1_runs()
    feasible = sum(r.report.feasible for r in runs)
    slowest = max(r.report.wall_time for r in runs)
    ok = feasible == len(runs) and slowest < TIME_BUDGET
    _report(1, ok, f"feasible {feasible}/{len(runs)} runs, slowest solve {slowest:.3f}s (budget {TIME_BUDGET}s)")
    assert slowest < TIME_BUDGET
    assert feasible == len(runs)


# ---------------------------------------------------------------- 2


def test_criterion_2_quality_against_exact_oracle():
    cases = tiny_cases()
    runs = tiny_runs()
    ratios = [rep.total_cost / cases[i][1] for i, _, rep in runs if rep.feasible]
    feasible = len(ratios)
    mean_ratio = statistics.fmean(ratios) if ratios else math.inf
    low = min(ratios) if ratios else math.inf
    ok = feasible == len(runs) and mean_ratio <= 1.10 and low >= RATIO_FLOOR
    _report(
        2,
        ok,
        f"{len(cases)} instances x {len(TINY_SEEDS)} seeds: feasible {feasible}/{len(runs)}, "
        f"mean ratio {mean_ratio:.4f} (<= 1.10), min ratio {low:.6f}",
    )
    assert low >= RATIO_FLOOR
    assert mean_ratio <= 1.10
    assert feasible == len(runs)


# ---------------------------------------------------------------- 3


def test_criterion_3_termination_bound():
    reports = [r.report for r in a1_runs()] + [rep for _, _, rep in tiny_runs()]
    instances = [a1_instances()[r.instance_index] for r in a1_runs()] + [tiny_cases()[i][0] for i, _, _ in tiny_runs()]
    worst_lambda = max(max(rep.reroutes_per_commodity, default=0) for rep in reports)
    pass_excess = max(
        rep.main_loop_iterations - (DEFAULT_LAMBDA0 * inst.num_commodities + 1) for rep, inst in zip(reports, instances)
    )
    ok = worst_lambda <= DEFAULT_LAMBDA0 and pass_excess <= 0
    _report(3, ok, f"max reroutes of one commodity {worst_lambda} (<= 43); worst pass slack {-pass_excess}")
    assert worst_lambda <= DEFAULT_LAMBDA0
    assert pass_excess <= 0


# ---------------------------------------------------------------- 4


def test_criterion_4_hurdle_rarity():
    runs = a1_runs()
    quiet = sum(r.report.hurdle_activations == 0 for r in runs)
    share = quiet / len(runs)
    ok = share >= 0.95
    _report(4, ok, f"runs with zero hurdle activations {quiet}/{len(runs)} = {share:.1%} (>= 95%)")
    assert share >= 0.95


# ---------------------------------------------------------------- 5


def test_criterion_5_final_pass_behaviour():
    runs = [r for r in a1_runs() if not r.report.trivially_feasible]
    increased = [r for r in runs if r.report.violated_arcs_after_feaspath > r.report.violated_arcs_before_feaspath]
    pre_feasible = [r for r in runs if r.report.feasible_before_feaspath]
    cost_up = [r for r in pre_feasible if r.report.total_cost > r.report.cost_before_feaspath]
    all_runs = a1_runs()
    fraction = sum(r.report.feasible_before_feaspath for r in all_runs) / len(all_runs)
    ok = not increased and not cost_up
    _report(
        5,
        ok,
        f"(a) violated-arc increases {len(increased)}; (b) cost increases on {len(cost_up)} of "
        f"{len(pre_feasible)} pre-feasible runs; (c) feasible before final pass {fraction:.2%} (reported only)",
    )
    assert not increased
    assert not cost_up


# ---------------------------------------------------------------- 6


def test_criterion_6_seed_robustness():
    by_instance: dict[int, list[float]] = {}
    for r in a1_runs():
        by_instance.setdefault(r.instance_index, []).append(r.report.total_cost)
    cvs = [statistics.pstdev(c) / statistics.fmean(c) for c in by_instance.values()]
    worst = max(cvs)
    ok = worst <= 0.02
    _report(6, ok, f"cost CV over {len(A1_SEEDS)} seeds: worst {worst:.4f}, mean {statistics.fmean(cvs):.4f} (<= 0.02)")
    assert worst <= 0.02


# ---------------------------------------------------------------- 7


def test_criterion_7_lower_bound_sanity():
    ratios = [r.report.total_cost / r.lower_bound for r in a1_runs()]
    ratios += [rep.total_cost / lower_bound(tiny_cases()[i][0]) for i, _, rep in tiny_runs()]
    low = min(ratios)

    # Give every arc room for all demand at once so nothing is congested.
    uncongested_err = 0.0
    for inst in a1_instances():
        total = float(inst.demands.sum())
        roomy = Instance(inst.network.with_capacities([total] * inst.network.num_arcs), inst.commodities)
        rep = solve(roomy, SolveConfig(default_params(roomy), 0))
        uncongested_err = max(uncongested_err, abs(rep.total_cost / lower_bound(roomy) - 1.0))
    ok = low >= 1.0 and uncongested_err <= 1e-9
    _report(7, ok, f"min cost/lower-bound {low:.6f} (>= 1); uncongested max |ratio - 1| {uncongested_err:.2e}")
    assert low >= 1.0
    assert uncongested_err <= 1e-9


# ---------------------------------------------------------------- 8


def test_criterion_8_generator_contract():
    instances = list(a1_instances()) + [inst for inst, _ in tiny_cases()]
    instances += [
        generate(GenSpec(num_nodes=30, num_arcs=90, num_commodities=112, hub_fraction=0.1,
                         hub_commodity_fraction=0.8, seed=s))
        for s in range(10)
    ]
    bad_min = bad_p90 = bad_cert = bad_conn = 0
    for inst in instances:
        net = inst.network
        if float(net.costs.min()) != 10.0:
            bad_min += 1
        if abs(float(np.percentile(net.costs, 90)) - 2000.0) > 0.001 * 2000.0:
            bad_p90 += 1
        routes = inst.certificate
        state = FlowState(inst, routes)
        try:
            verify_solution(inst, Solution(tuple(routes), sum(
                c.demand * sum(net.arcs[a].cost for a in r) for c, r in zip(inst.commodities, routes))))
        except VerificationError:
            bad_cert += 1
        if not capacity_feasible(state):
            bad_cert += 1
        if not is_strongly_connected(net.num_nodes, net.tails, net.heads):
            bad_conn += 1
    ok = bad_min == bad_p90 == bad_cert == bad_conn == 0
    _report(
        8,
        ok,
        f"{len(instances)} instances: min!=10 {bad_min}, p90 off by >0.1% {bad_p90}, "
        f"certificate rejected {bad_cert}, not strongly connected {bad_conn}",
    )
    assert ok


# ---------------------------------------------------------------- 9


def _random_small_instance(rng: np.random.Generator) -> Instance:
    from ihh.model import Arc, Commodity, Network

    n = int(rng.integers(2, 11))
    density = rng.uniform(0.15, 0.7)
    arcs = []
    for t in range(n):
        for h in range(n):
            if t != h and rng.random() < density:
                # Integer costs create ties; a few zeros exercise the boundary.
                cost = float(rng.integers(0, 20)) if rng.random() < 0.5 else float(rng.uniform(0, 100))
                arcs.append(Arc(len(arcs), t, h, cost, float(rng.integers(1, 40))))
    coms = []
    for i in range(int(rng.integers(1, 5))):
        s, t = rng.choice(n, size=2, replace=False)
        coms.append(Commodity(i, int(s), int(t), float(rng.integers(1, 15))))
    return Instance(Network(n, arcs), tuple(coms))


def test_criterion_9_shortest_path_equivalence():
    rng = np.random.Generator(np.random.PCG64(99))
    mismatches = 0
    checks = 0
    for _ in range(SP_GRAPHS):
        inst = _random_small_instance(rng)
        net = inst.network
        state = FlowState(inst)
        # Put each commodity on some simple path so loads and residuals are nontrivial.
        for com in inst.commodities:
            paths = simple_paths(net, com.origin, com.destination)
            if paths:
                state.set_route(com.id, paths[int(rng.integers(len(paths)))])
        if net.num_arcs == 0 or not (net.costs > 0).any():
            params = IhhParams(beta=5.0, mu=10.0, pi=2.0, big_m=1e6)
        else:
            params = default_params(inst)
        for com in inst.commodities:
            paths = simple_paths(net, com.origin, com.destination)
            for costs in (net.costs, market_costs(params, state, com), feasible_costs(params, state, com)):
                costs = costs.tolist()
                result = dijkstra(net, com.origin, com.destination, costs)
                checks += 1
                if not paths:
                    mismatches += bool(result.route)
                    continue
                best = min(sum(costs[a] for a in p) for p in paths)
                got = path_cost(result.route, costs) if result.route else math.inf
                if abs(got - best) > SP_RTOL * max(abs(best), 1.0) or abs(result.cost - best) > SP_RTOL * max(abs(best), 1.0):
                    mismatches += 1
    ok = mismatches == 0
    _report(9, ok, f"{SP_GRAPHS} graphs, {checks} oracle queries, mismatches {mismatches}")
    assert mismatches == 0


# ---------------------------------------------------------------- 10


def test_criterion_10_subquadratic_scaling():
    medians = []
    for k in LADDER:
        times = []
        for topo in range(LADDER_TOPOLOGIES):
            inst = generate(replace(A1, num_commodities=k, seed=5000 + topo))
            params = default_params(inst)
            for seed in LADDER_SEEDS:
                start = time.perf_counter()
                solve(inst, SolveConfig(params, seed))
                times.append(time.perf_counter() - start)
        medians.append(statistics.median(times))
    slope = float(np.polyfit(np.log(LADDER), np.log(medians), 1)[0])
    ok = slope < 2.0
    shown = ", ".join(f"{k}:{m * 1000:.1f}ms" for k, m in zip(LADDER, medians))
    _report(10, ok, f"median solve time {shown}; fitted exponent {slope:.2f} (< 2)")
    assert slope < 2.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
