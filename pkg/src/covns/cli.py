"""Command-line interface: ``covns generate|solve|experiment|report``.

Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags or a
missing input file).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from covns import __version__
from covns.benchgen import GenSpec, generate_scenario, load_scenario
from covns.graph import GraphError
from covns.harness import ALGORITHMS, ExperimentError, ExperimentPlan, run_experiment
from covns.multitask import MigrationPolicy, solve_covns, solve_pvns
from covns.operators import ALL_OPERATORS, OperatorKind
from covns.stats import ResultsFormatError, analyze, format_report, read_results_csv, write_report_csv
from covns.vns import VnsConfig, solve_svns, write_trace

# solver defaults; flags override manifest values, which override these
SOLVER_DEFAULTS = {
    "n_per_deme": 10,
    "evals_per_individual": 1000,
    "freq_migr": 0.03,
    "prop": 0.05,
    "seed": 0,
    "algorithm": "covns",
    "migration_direction": "pull",
}


class UsageError(Exception):
    pass


def _operators(text: str):
    try:
        return tuple(OperatorKind.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _algorithms(text: str):
    algos = tuple(t.strip().lower() for t in text.split(",") if t.strip())
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(ALGORITHMS)}")
    return algos


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario manifest JSON")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--n", dest="n_per_deme", type=int, default=None,
                   help="individuals per deme (default 10)")
    p.add_argument("--evals-scale", dest="evals_per_individual", type=int, default=None,
                   help="evaluations per individual; per-task budget is n x this (default 1000)")
    p.add_argument("--freq-migr", dest="freq_migr", type=float, default=None,
                   help="fraction of the per-deme budget between migrations (default 0.03)")
    p.add_argument("--prop", type=float, default=None,
                   help="fraction of a deme migrated per epoch (default 0.05)")
    p.add_argument("--migration-direction", dest="migration_direction", choices=("pull", "push"),
                   default=None, help="default pull")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covns", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an OI/UI benchmark scenario")
    g.add_argument("--mode", type=str.upper, choices=("OI", "UI"), default="OI")
    g.add_argument("--base", type=int, default=50, help="nodes in the first instance")
    g.add_argument("--increment", type=int, default=5)
    g.add_argument("--count", type=int, default=11, help="instances in the chain")
    g.add_argument("--communities", type=int, default=8)
    g.add_argument("--p-in", dest="p_in", type=float, default=0.85)
    g.add_argument("--p-out", dest="p_out", type=float, default=0.15)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--json", action="store_true")

    s = sub.add_parser("solve", help="run one solver on a scenario")
    s.add_argument("--algorithm", type=str.lower, choices=ALGORITHMS, default=None,
                   help="default covns")
    _add_solver_flags(s)
    s.add_argument("--operators", type=_operators, default=ALL_OPERATORS,
                   help="comma-separated subset of ce1,ce3,cc1,cc3")
    s.add_argument("--out", help="write best partitions to this JSON file")
    s.add_argument("--trace-dir", help="write one trace CSV per task here")
    s.add_argument("--json", action="store_true")

    e = sub.add_parser("experiment", help="run an algorithms x runs grid")
    _add_solver_flags(e)
    e.add_argument("--algorithms", type=_algorithms, default=ALGORITHMS)
    e.add_argument("--runs", type=int, default=20)
    e.add_argument("--base-seed", dest="base_seed", type=int, default=None,
                   help="run r uses base_seed + r (default: --seed, else 0)")
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--no-traces", action="store_true")
    e.add_argument("--no-timing", action="store_true", help="write 0 wall times (reproducible files)")
    e.add_argument("--control", default="covns")
    e.add_argument("--json", action="store_true")

    r = sub.add_parser("report", help="summarize a results CSV")
    r.add_argument("results", help="CSV with algorithm,instance,run_index,fitness columns")
    r.add_argument("--control", default="covns")
    r.add_argument("--csv", help="also write the report as CSV")
    r.add_argument("--json", action="store_true")
    return parser


def _resolve(args, manifest: dict) -> dict:
    out = {}
    for key, default in SOLVER_DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None:
            value = manifest.get(key, default)
        out[key] = value
    return out


def _load_manifest(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"scenario manifest not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON: {exc}") from None


def cmd_generate(args) -> int:
    spec = GenSpec(
        base_node_count=args.base, increment=args.increment, instance_count=args.count,
        communities_M=args.communities, p_in=args.p_in, p_out=args.p_out,
        mode=args.mode, seed=args.seed,
    )
    scenario = generate_scenario(spec, args.out)
    manifest = Path(args.out) / "scenario.json"
    if args.json:
        print(json.dumps({"manifest": str(manifest), "instances": scenario.names}))
    else:
        print(manifest)
    return 0


def cmd_solve(args) -> int:
    manifest = _load_manifest(args.scenario)
    opts = _resolve(args, manifest)
    scenario = load_scenario(args.scenario)
    cfg = VnsConfig(
        population_size=opts["n_per_deme"],
        evals_per_individual=opts["evals_per_individual"],
        operators=args.operators,
        seed=opts["seed"],
    )
    algo = opts["algorithm"]
    if algo not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algo!r}")
    if algo == "svns":
        results = [solve_svns(g, cfg) for g in scenario.graphs]
    elif algo == "pvns":
        results = solve_pvns(scenario.graphs, cfg, workers=args.workers).tasks
    else:
        policy = MigrationPolicy(opts["freq_migr"], opts["prop"], opts["migration_direction"])
        results = solve_covns(scenario.graphs, cfg, policy, workers=args.workers).tasks
    doc = {
        "algorithm": algo,
        "seed": opts["seed"],
        "tasks": [
            {"name": name, "best_fitness": r.best_fitness, "evaluations": r.evaluations,
             "partition": r.best.partition.tolist()}
            for name, r in zip(scenario.names, results)
        ],
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    if args.trace_dir:
        tdir = Path(args.trace_dir)
        tdir.mkdir(parents=True, exist_ok=True)
        for name, r in zip(scenario.names, results):
            write_trace(tdir / f"{name}.csv", r.trace)
    if args.json:
        print(json.dumps(doc))
    else:
        for task in doc["tasks"]:
            print(f"{task['name']}\t{task['best_fitness']:.6f}")
    return 0


def _print_report(matrix, control, as_json, csv_path=None) -> None:
    if control not in matrix.algorithms:
        control = None
    report = analyze(matrix, control)
    if csv_path:
        write_report_csv(csv_path, matrix, report)
    if as_json:
        print(json.dumps({
            "control": report.control,
            "mean_ranks": report.mean_ranks,
            "unadjusted_p": report.unadjusted_p,
            "adjusted_p": report.adjusted_p,
        }))
    else:
        print(format_report(matrix, report))


def cmd_experiment(args) -> int:
    manifest = _load_manifest(args.scenario)
    opts = _resolve(args, manifest)
    base_seed = args.base_seed if args.base_seed is not None else opts["seed"]
    plan = ExperimentPlan(
        manifest=args.scenario, out_dir=args.out, algorithms=args.algorithms,
        run_count=args.runs, base_seed=base_seed, n_per_deme=opts["n_per_deme"],
        evals_per_individual=opts["evals_per_individual"], freq_migr=opts["freq_migr"],
        prop=opts["prop"], migration_direction=opts["migration_direction"],
        workers=args.workers, save_traces=not args.no_traces, record_timing=not args.no_timing,
    )
    result = run_experiment(plan)
    _print_report(result.matrix, args.control, args.json)
    return 0


def cmd_report(args) -> int:
    if not Path(args.results).is_file():
        raise UsageError(f"results file not found: {args.results}")
    matrix = read_results_csv(args.results)
    _print_report(matrix, args.control, args.json, args.csv)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"covns {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, ResultsFormatError, ExperimentError, ValueError, OSError) as exc:
        print(f"covns {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
