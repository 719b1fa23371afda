"""Differential-evolution tuning of the scarcity parameters (beta, mu, pi).

A member is scored by solving every benchmark instance with the member's
parameters and averaging cost divided by the instance's reference cost.
Lower is better.  The hurdle schedule (lambda0, lambda1) is left alone.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Instance
from .pricing import IhhParams, default_params
from .solver import SolveConfig, make_rng, solve

PARAM_NAMES = ("beta", "mu", "pi")
INFEASIBLE_PENALTY_FACTOR = 10.0


@dataclass(frozen=True)
class BenchmarkCase:
    instance: Instance
    reference_cost: float
    label: str = ""

    def __post_init__(self) -> None:
        if not self.reference_cost > 0.0:
            raise ValueError(f"reference cost must be positive, got {self.reference_cost}")


def _pooled_gm(values: list[np.ndarray]) -> float:
    joined = np.concatenate(values)
    joined = joined[joined > 0.0]
    return float(np.exp(np.mean(np.log(joined))))


def pooled_default_params(benchmark: Sequence[BenchmarkCase]) -> IhhParams:
    """Default parameters computed over all benchmark arcs and commodities together."""
    caps = [c.instance.network.capacities for c in benchmark]
    costs = [c.instance.network.costs for c in benchmark]
    demands = [c.instance.demands for c in benchmark if c.instance.num_commodities]
    beta = math.sqrt(2.0) / 2.0 * _pooled_gm(caps)
    if demands:
        beta = max(beta, _pooled_gm(demands))
    template = default_params(benchmark[0].instance)
    return replace(template, beta=beta, mu=_pooled_gm(costs) * math.sqrt(math.e), big_m=None)


def default_search_ranges(benchmark: Sequence[BenchmarkCase]) -> dict[str, tuple[float, float]]:
    gm_u = _pooled_gm([c.instance.network.capacities for c in benchmark])
    gm_c = _pooled_gm([c.instance.network.costs for c in benchmark])
    return {
        "beta": (0.01 * gm_u, 100.0 * gm_u),
        "mu": (0.01 * gm_c, 100.0 * gm_c),
        "pi": (1.0, 30.0),
    }


@dataclass
class TunerConfig:
    benchmark: list[BenchmarkCase]
    population_size: int = 30
    generations: int = 100
    seeds_per_eval: int = 1
    search_ranges: dict[str, tuple[float, float]] | None = None
    de_weight: float = 0.5
    de_crossover: float = 0.9
    seed: int = 0
    # Seed the initial population with the default parameters.
    include_defaults: bool = True

    def __post_init__(self) -> None:
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if self.generations < 0 or self.seeds_per_eval < 1:
            raise ValueError("generations must be >= 0 and seeds_per_eval >= 1")
        if not 0.0 <= self.de_crossover <= 1.0:
            raise ValueError("de_crossover must lie in [0, 1]")
        if self.search_ranges is not None:
            for name in PARAM_NAMES:
                lo, hi = self.search_ranges[name]
                if not 0.0 < lo <= hi:
                    raise ValueError(f"bad search range for {name}: {(lo, hi)}")


@dataclass
class TuneResult:
    best: tuple[float, float, float]
    best_fitness: float
    # Best fitness after the initial population and after each generation.
    trace: list[float]
    evaluated: list[tuple[float, float, float]] = field(default_factory=list)

    def as_params(self, template: IhhParams) -> IhhParams:
        beta, mu, pi = self.best
        return replace(template, beta=beta, mu=mu, pi=pi)


def fitness(
    member: Sequence[float],
    config: TunerConfig,
    worst_feasible: float = 1.0,
) -> tuple[float, float]:
    """Mean normalized cost of ``member`` over the benchmark.

    An infeasible run scores ``10 * worst_feasible``.  Returns the fitness and
    the worst normalized cost among this member's feasible runs (or
    ``worst_feasible`` if none were feasible), so callers can track the
    penalty baseline.
    """
    if not config.benchmark:
        raise ValueError("benchmark is empty")
    beta, mu, pi = (float(v) for v in member)
    scores: list[float] = []
    infeasible = 0
    worst = worst_feasible
    for case in config.benchmark:
        template = default_params(case.instance)
        params = replace(template, beta=beta, mu=mu, pi=pi)
        for seed in range(config.seeds_per_eval):
            report = solve(case.instance, SolveConfig(params, seed))
            if report.feasible:
                ratio = report.total_cost / case.reference_cost
                scores.append(ratio)
                worst = max(worst, ratio)
            else:
                infeasible += 1
    penalty = INFEASIBLE_PENALTY_FACTOR * worst
    total = sum(scores) + infeasible * penalty
    return total / (len(scores) + infeasible), worst


class _Evaluator:
    def __init__(self, config: TunerConfig) -> None:
        self.config = config
        self.worst_feasible = 1.0
        self.evaluated: list[tuple[float, float, float]] = []

    def __call__(self, member: np.ndarray) -> float:
        self.evaluated.append(tuple(float(v) for v in member))
        value, worst = fitness(member, self.config, self.worst_feasible)
        self.worst_feasible = max(self.worst_feasible, worst)
        return value


def tune(config: TunerConfig) -> TuneResult:
    """DE/rand/1/bin over (beta, mu, pi) with elitist one-to-one replacement."""
    if not config.benchmark:
        raise ValueError("benchmark is empty")
    ranges = config.search_ranges or default_search_ranges(config.benchmark)
    low = np.array([ranges[n][0] for n in PARAM_NAMES])
    high = np.array([ranges[n][1] for n in PARAM_NAMES])
    rng = make_rng(config.seed)
    size = config.population_size
    dim = len(PARAM_NAMES)

    population = low + rng.random((size, dim)) * (high - low)
    if config.include_defaults:
        d = pooled_default_params(config.benchmark)
        population[0] = np.clip([d.beta, d.mu, d.pi], low, high)
    evaluate = _Evaluator(config)
    scores = np.array([evaluate(member) for member in population])
    trace = [float(scores.min())]

    for _ in range(config.generations):
        for i in range(size):
            candidates = [j for j in range(size) if j != i]
            r1, r2, r3 = rng.choice(candidates, size=3, replace=False)
            mutant = population[r1] + config.de_weight * (population[r2] - population[r3])
            cross = rng.random(dim) < config.de_crossover
            cross[rng.integers(dim)] = True
            trial = np.clip(np.where(cross, mutant, population[i]), low, high)
            score = evaluate(trial)
            if score < scores[i]:
                population[i] = trial
                scores[i] = score
        trace.append(float(scores.min()))

    best = int(np.argmin(scores))
    return TuneResult(
        best=tuple(float(v) for v in population[best]),
        best_fitness=float(scores[best]),
        trace=trace,
        evaluated=evaluate.evaluated,
    )
