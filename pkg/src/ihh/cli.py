"""Command-line front end.

Subcommands::

    ihh generate   write random instances and print their summary
    ihh solve      solve one instance, write the solution, print a record
    ihh bench      solve instances over several seeds and aggregate
    ihh verify     check a solution file against its instance
    ihh tune       differential-evolution search for beta, mu and pi

Records are JSON lines carrying ``"schema": 1``.  Exit status is 0 on
success, 1 for usage errors, 2 for bad input data and 3 when ``verify``
rejects a solution.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .exceptions import GeneratorError, IhhError, OracleLimitError
from .fileio import Solution, read_instance, read_solution, write_instance, write_solution
from .generator import GenSpec, generate, instance_summary
from .model import FEASIBILITY_RTOL, Instance, validate_route
from .oracle import OracleLimits, exact_solve, lower_bound
from .pricing import IhhParams, default_params
from .solver import SCHEMA_VERSION, SolveConfig, SolveReport, solve
from .tuner import PARAM_NAMES, BenchmarkCase, TunerConfig, default_search_ranges, tune

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

DEFAULT_BENCH_SEEDS = "0-9"
COST_RTOL = 1e-6
PARAM_KEYS = ("beta", "mu", "pi", "lambda0", "lambda1", "big_m")
INT_PARAM_KEYS = ("lambda0", "lambda1")


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for data errors here.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(record: dict[str, Any], out: TextIO) -> None:
    out.write(json.dumps(record, sort_keys=False) + "\n")


def parse_seeds(text: str) -> list[int]:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(p) for p in part.split("-", 1))
                if hi < lo:
                    raise UsageError(f"empty seed range {part!r}")
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None
    if not seeds or min(seeds) < 0:
        raise UsageError(f"bad seed list {text!r}")
    return seeds


def read_params_file(path: str) -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read params file: {exc}") from None
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or key not in PARAM_KEYS:
            raise UsageError(f"{path}:{no}: expected one of {', '.join(PARAM_KEYS)} as key=value")
        try:
            values[key] = int(value) if key in INT_PARAM_KEYS else float(value)
        except ValueError:
            raise UsageError(f"{path}:{no}: bad value {value!r} for {key}") from None
    return values


def format_params_file(params: IhhParams) -> str:
    lines = [f"{key} = {getattr(params, key)!r}" for key in PARAM_KEYS if getattr(params, key) is not None]
    return "\n".join(lines) + "\n"


def param_overrides(args: argparse.Namespace) -> dict[str, float]:
    overrides = read_params_file(args.params_file) if args.params_file else {}
    for key in PARAM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def resolve_params(instance: Instance, overrides: dict[str, float]) -> IhhParams:
    try:
        return replace(default_params(instance), **overrides)
    except ValueError as exc:
        raise UsageError(f"invalid parameters: {exc}") from None


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("heuristic parameters (default: derived from the instance)")
    g.add_argument("--beta", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--pi", type=float)
    g.add_argument("--lambda0", type=int)
    g.add_argument("--lambda1", type=int)
    g.add_argument("--big-m", dest="big_m", type=float)
    g.add_argument("--params-file", help="key=value file; explicit flags win over it")


def expand_patterns(patterns: list[str]) -> list[str]:
    paths: set[str] = set()
    for pattern in patterns:
        matches = glob.glob(pattern)
        if not matches and Path(pattern).is_file():
            matches = [pattern]
        paths.update(matches)
    if not paths:
        raise UsageError(f"no instance files match {' '.join(patterns)}")
    return sorted(paths)


# ---------------------------------------------------------------- generate


def cmd_generate(args: argparse.Namespace, out: TextIO) -> int:
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    base = GenSpec(
        num_nodes=args.nodes,
        num_arcs=args.arcs,
        num_commodities=args.commodities,
        cost_min=args.cost_min,
        cost_p90=args.cost_p90,
        demand_min=args.demand_min,
        demand_max=args.demand_max,
        hub_fraction=args.hub_fraction,
        hub_commodity_fraction=args.hub_commodities,
        distance_decay_exponent=args.decay,
        seed=args.seed,
    )
    if args.count == 0:
        return EXIT_OK
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ("nodes", "arcs", "commodities", "mean_cost", "mean_demand", "mean_capacity", "degree",
               "demand_capacity_ratio", "mean_demand_mean_capacity_ratio")
    rows: list[dict[str, float]] = []
    out.write("file " + " ".join(columns) + "\n")
    for i in range(args.count):
        spec = replace(base, seed=args.seed + i)
        instance = generate(spec)
        path = out_dir / f"{args.prefix}{i:03d}.odimcf"
        write_instance(path, instance)
        summary = instance_summary(instance)
        rows.append(summary)
        out.write(f"{path.name} " + " ".join(f"{summary[c]:g}" for c in columns) + "\n")
    means = {c: statistics.fmean(r[c] for r in rows) for c in columns}
    out.write("mean " + " ".join(f"{means[c]:g}" for c in columns) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- solve / bench


def run_one(
    path: str, seed: int, overrides: dict[str, float], group: str = "", oracle: bool = False
) -> tuple[dict[str, Any], SolveReport]:
    """Solve one (instance file, seed) pair and return its bench record."""
    instance = read_instance(path)
    params = resolve_params(instance, overrides)
    report = solve(instance, SolveConfig(params, seed))
    lb = lower_bound(instance)
    record = report.to_record(
        instance_id=Path(path).stem,
        seed=seed,
        group=group,
        lower_bound=lb,
        lower_bound_ratio=report.total_cost / lb if lb > 0.0 and math.isfinite(lb) else None,
    )
    if oracle:
        try:
            result = exact_solve(instance, OracleLimits())
        except OracleLimitError as exc:
            record.update(optimal_cost=None, optimal_ratio=None, oracle_status=f"limit: {exc}")
        else:
            ratio = None
            if result.feasible and report.feasible and result.optimal_cost > 0.0:
                ratio = report.total_cost / result.optimal_cost
            record.update(
                optimal_cost=result.optimal_cost,
                optimal_ratio=ratio,
                oracle_status="optimal" if result.feasible else "infeasible",
            )
    return record, report


def cmd_solve(args: argparse.Namespace, out: TextIO) -> int:
    overrides = param_overrides(args)
    record, report = run_one(args.instance, args.seed, overrides, args.group)
    solution_path = args.out or str(Path(args.instance).with_suffix(".sol"))
    write_solution(solution_path, Solution(tuple(report.final_state.routes), report.total_cost, Path(args.instance).stem))
    record["solution"] = solution_path
    _emit(record, out)
    return EXIT_OK


def _bench_job(job: tuple[str, int, dict[str, float], str, bool]) -> dict[str, Any]:
    return run_one(*job)[0]


def aggregate(records: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Per-instance statistics over the seeds run, sorted by instance id."""
    by_instance: dict[str, list[dict[str, Any]]] = {}
    for r in records:
        by_instance.setdefault(r["instance"], []).append(r)
    rows = []
    for name in sorted(by_instance):
        runs = sorted(by_instance[name], key=lambda r: r["seed"])
        costs = [r["cost"] for r in runs]
        times = [r["solve_seconds"] for r in runs]
        mean_cost = statistics.fmean(costs)
        lb_ratios = [r["lower_bound_ratio"] for r in runs if r["lower_bound_ratio"] is not None]
        opt_ratios = [r["optimal_ratio"] for r in runs if r.get("optimal_ratio") is not None]
        rows.append({
            "schema": SCHEMA_VERSION,
            "kind": "aggregate",
            "instance": name,
            "group": runs[0]["group"],
            "runs": len(runs),
            "feasible_runs": sum(1 for r in runs if r["feasible"]),
            "mean_cost": mean_cost,
            "best_cost": min(costs),
            "worst_cost": max(costs),
            # Population standard deviation over the seeds, divided by the mean.
            "cv_cost": statistics.pstdev(costs) / mean_cost if mean_cost > 0.0 else 0.0,
            "mean_seconds": statistics.fmean(times),
            "best_seconds": min(times),
            "worst_seconds": max(times),
            "mean_lower_bound_ratio": statistics.fmean(lb_ratios) if lb_ratios else None,
            "mean_optimal_ratio": statistics.fmean(opt_ratios) if opt_ratios else None,
            "hurdle_activations": sum(r["hurdle_activations"] for r in runs),
        })
    return rows


def cmd_bench(args: argparse.Namespace, out: TextIO) -> int:
    paths = expand_patterns(args.instances)
    seeds = parse_seeds(args.seeds)
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    overrides = param_overrides(args)
    jobs = [(p, s, overrides, args.group, args.oracle) for p in paths for s in seeds]
    if args.workers == 1:
        records = [_bench_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(_bench_job, jobs))
    records.sort(key=lambda r: (r["instance"], r["seed"]))
    for r in records:
        r["kind"] = "run"
    rows = aggregate(records)

    sink = open(args.jsonl, "w") if args.jsonl else out
    try:
        for r in records + rows:
            _emit(r, sink)
    finally:
        if sink is not out:
            sink.close()
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    if args.runs_csv:
        with open(args.runs_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(records[0]))
            writer.writeheader()
            writer.writerows(records)
    return EXIT_OK


# ---------------------------------------------------------------- verify


def verify_solution(instance: Instance, solution: Solution) -> float:
    """Recomputed total cost; raises VerificationError at the first problem."""
    net = instance.network
    if len(solution.routes) != instance.num_commodities:
        raise VerificationError(
            f"solution has {len(solution.routes)} routes but the instance has {instance.num_commodities} commodities"
        )
    load = np.zeros(net.num_arcs)
    total = 0.0
    for com, route in zip(instance.commodities, solution.routes):
        if not route:
            raise VerificationError(f"commodity {com.id} is not routed")
        try:
            ok = validate_route(net, com, route)
        except IhhError as exc:
            raise VerificationError(f"commodity {com.id}: {exc}") from None
        if not ok:
            raise VerificationError(
                f"commodity {com.id}: route is not a simple path from {com.origin} to {com.destination}"
            )
        for a in route:
            load[a] += com.demand
        total += com.demand * sum(net.arcs[a].cost for a in route)
    caps = net.capacities
    over = np.flatnonzero(load > caps + FEASIBILITY_RTOL * caps)
    if over.size:
        a = int(over[0])
        arc = net.arcs[a]
        raise VerificationError(f"arc {a} ({arc.tail}->{arc.head}) carries {load[a]:g} over capacity {arc.capacity:g}")
    if abs(solution.cost - total) > COST_RTOL * max(abs(total), 1.0):
        raise VerificationError(f"stated cost {solution.cost!r} does not match recomputed cost {total!r}")
    return total


def cmd_verify(args: argparse.Namespace, out: TextIO) -> int:
    instance = read_instance(args.instance)
    solution = read_solution(args.solution)
    try:
        total = verify_solution(instance, solution)
    except VerificationError as exc:
        out.write(f"FAIL {exc}\n")
        return EXIT_VERIFY
    out.write(f"OK cost={total!r}\n")
    return EXIT_OK


# ---------------------------------------------------------------- tune


def reference_cost(instance: Instance, mode: str, path: str) -> float:
    if mode == "lower-bound":
        value = lower_bound(instance)
    else:
        result = exact_solve(instance)
        if not result.feasible:
            raise UsageError(f"{path}: oracle proves the instance infeasible")
        value = result.optimal_cost
    if not (value > 0.0 and math.isfinite(value)):
        raise UsageError(f"{path}: reference cost {value} is not positive and finite")
    return value


def cmd_tune(args: argparse.Namespace, out: TextIO) -> int:
    paths = expand_patterns(args.instances)
    benchmark = [BenchmarkCase(inst, reference_cost(inst, args.reference, p), Path(p).stem)
                 for p, inst in ((p, read_instance(p)) for p in paths)]
    ranges = None
    explicit = {name: getattr(args, f"{name}_range") for name in PARAM_NAMES}
    if any(v is not None for v in explicit.values()):
        ranges = default_search_ranges(benchmark)
        ranges.update({k: tuple(v) for k, v in explicit.items() if v is not None})
    try:
        config = TunerConfig(
            benchmark=benchmark,
            population_size=args.population_size,
            generations=args.generations,
            seeds_per_eval=args.seeds_per_eval,
            search_ranges=ranges,
            de_weight=args.de_weight,
            de_crossover=args.de_crossover,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = tune(config)
    for generation, value in enumerate(result.trace):
        _emit({"schema": SCHEMA_VERSION, "kind": "generation", "generation": generation, "best_fitness": value}, out)
    beta, mu, pi = result.best
    _emit({"schema": SCHEMA_VERSION, "kind": "best", "beta": beta, "mu": mu, "pi": pi,
           "fitness": result.best_fitness, "evaluations": len(result.evaluated)}, out)
    if args.params_out:
        template = default_params(benchmark[0].instance)
        Path(args.params_out).write_text(format_params_file(replace(result.as_params(template), big_m=None)))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ihh", description="Market-pricing heuristic for single-path multicommodity flow.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = GenSpec()
    p = sub.add_parser("generate", help="write random instances")
    p.add_argument("--nodes", type=int, default=d.num_nodes)
    p.add_argument("--arcs", type=int, default=d.num_arcs)
    p.add_argument("--commodities", type=int, default=d.num_commodities)
    p.add_argument("--cost-min", type=float, default=d.cost_min)
    p.add_argument("--cost-p90", type=float, default=d.cost_p90)
    p.add_argument("--demand-min", type=float, default=d.demand_min)
    p.add_argument("--demand-max", type=float, default=d.demand_max)
    p.add_argument("--hub-fraction", type=float, default=d.hub_fraction)
    p.add_argument("--hub-commodities", type=float, default=d.hub_commodity_fraction,
                   help="fraction of commodities forced hub to hub")
    p.add_argument("--decay", type=float, default=d.distance_decay_exponent, help="distance decay exponent")
    p.add_argument("--seed", type=int, default=0, help="seed of the first instance; later ones add 1 each")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="instance")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed (default 0)")
    p.add_argument("--out", help="solution path (default: instance path with .sol suffix)")
    p.add_argument("--group", default="")
    _add_param_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="solve instances over a seed set")
    p.add_argument("instances", nargs="+", help="instance files or glob patterns")
    p.add_argument("--seeds", default=DEFAULT_BENCH_SEEDS, help="e.g. 0-9 or 1,3,5 (default 0-9)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--oracle", action="store_true", help="also solve exactly and report the optimality ratio")
    p.add_argument("--group", default="")
    p.add_argument("--jsonl", help="write JSON lines here instead of standard output")
    p.add_argument("--csv", help="per-instance aggregate table")
    p.add_argument("--runs-csv", help="per-run table")
    _add_param_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="check a solution against its instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tune", help="tune beta, mu and pi by differential evolution")
    p.add_argument("instances", nargs="+", help="benchmark instance files or glob patterns")
    p.add_argument("--reference", choices=("lower-bound", "oracle"), default="lower-bound",
                   help="cost each run is normalized by")
    p.add_argument("--population-size", type=int, default=30)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--seeds-per-eval", type=int, default=1)
    p.add_argument("--de-weight", type=float, default=0.5)
    p.add_argument("--de-crossover", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    for name in PARAM_NAMES:
        p.add_argument(f"--{name}-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--params-out", help="write the best member as a key=value params file")
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (UsageError, GeneratorError) as exc:
        print(f"ihh {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IhhError, OSError, ValueError) as exc:
        print(f"ihh {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
