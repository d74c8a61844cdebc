"""Experiment grids: algorithms x runs over one scenario, with a budget audit."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from covns.benchgen import MultitaskScenario, load_scenario
from covns.graph import GraphError, read_graph
from covns.multitask import MigrationPolicy, solve_covns, solve_pvns
from covns.stats import ResultMatrix
from covns.vns import VnsConfig, solve_svns, write_trace

log = logging.getLogger(__name__)

ALGORITHMS = ("covns", "pvns", "svns")
RESULT_FIELDS = ["algorithm", "instance", "run_index", "best_fitness", "evaluations_used", "wall_time_ms"]


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentPlan:
    manifest: str
    out_dir: str | None = None
    algorithms: tuple[str, ...] = ALGORITHMS
    run_count: int = 20
    base_seed: int = 0
    n_per_deme: int = 10
    evals_per_individual: int = 1000
    freq_migr: float = 0.03
    prop: float = 0.05
    migration_direction: str = "pull"
    workers: int = 1
    save_traces: bool = True
    # wall times are the only non-reproducible column; off gives byte-identical output
    record_timing: bool = True

    def __post_init__(self):
        self.algorithms = tuple(a.lower() for a in self.algorithms)
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise ValueError(f"algorithms must be a non-empty subset of {ALGORITHMS}, got {unknown}")
        if self.run_count < 1:
            raise ValueError("run_count must be at least 1")
        self.policy()

    def config(self, seed: int) -> VnsConfig:
        return VnsConfig(
            population_size=self.n_per_deme,
            evals_per_individual=self.evals_per_individual,
            seed=seed,
        )

    def policy(self) -> MigrationPolicy:
        return MigrationPolicy(self.freq_migr, self.prop, self.migration_direction)


@dataclass
class RunRecord:
    run_index: int
    seed: int
    rows: list[dict] = field(default_factory=list)
    partitions: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    matrix: ResultMatrix
    rows: list[dict]
    runs: list[RunRecord] = field(repr=False, default_factory=list)


def validate_scenario(manifest) -> MultitaskScenario:
    """Load every task, collecting all per-file problems before failing."""
    manifest = Path(manifest)
    try:
        doc = json.loads(manifest.read_text())
    except FileNotFoundError:
        raise ExperimentError(f"{manifest}: scenario manifest not found") from None
    except json.JSONDecodeError as exc:
        raise ExperimentError(f"{manifest}: invalid JSON: {exc}") from None
    problems = []
    for entry in doc.get("tasks") or []:
        path = Path(entry) if Path(entry).is_absolute() else manifest.parent / entry
        try:
            g, _ = read_graph(path)
            g.require_positive_weight()
        except (OSError, GraphError, ValueError) as exc:
            problems.append(f"{path}: {exc}")
    if not doc.get("tasks"):
        problems.append(f"{manifest}: no tasks listed")
    if problems:
        raise ExperimentError("scenario validation failed:\n  " + "\n  ".join(problems))
    return load_scenario(manifest)


def run_single(plan: ExperimentPlan, scenario: MultitaskScenario, run_index: int) -> RunRecord:
    seed = plan.base_seed + run_index
    record = RunRecord(run_index, seed)
    cfg = plan.config(seed)
    totals = {}
    for algo in plan.algorithms:
        t0 = time.perf_counter()
        if algo == "svns":
            results, times = [], []
            for g in scenario.graphs:
                s0 = time.perf_counter()
                results.append(solve_svns(g, cfg))
                times.append((time.perf_counter() - s0) * 1000.0)
        else:
            if algo == "pvns":
                results = solve_pvns(scenario.graphs, cfg).tasks
            else:
                results = solve_covns(scenario.graphs, cfg, plan.policy()).tasks
            elapsed = (time.perf_counter() - t0) * 1000.0
            times = [elapsed] * len(results)
        totals[algo] = sum(r.evaluations for r in results)
        record.partitions[algo] = {}
        record.traces[algo] = {}
        for name, res, ms in zip(scenario.names, results, times):
            record.rows.append({
                "algorithm": algo,
                "instance": name,
                "run_index": run_index,
                "best_fitness": res.best_fitness,
                "evaluations_used": res.evaluations,
                "wall_time_ms": round(ms, 3) if plan.record_timing else 0,
            })
            record.partitions[algo][name] = {
                "best_fitness": res.best_fitness,
                "evaluations": res.evaluations,
                "partition": res.best.partition.tolist(),
            }
            if plan.save_traces:
                record.traces[algo][name] = res.trace
    expected = len(scenario.graphs) * cfg.evaluation_budget
    if any(total != expected for total in totals.values()):
        raise ExperimentError(f"run {run_index}: budget audit failed, expected {expected} each, got {totals}")
    return record


def _worker(args):
    plan, run_index = args
    return run_single(plan, load_scenario(plan.manifest), run_index)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _persist_run(out: Path, record: RunRecord) -> None:
    runs = out / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    doc = {"run_index": record.run_index, "seed": record.seed, "algorithms": record.partitions}
    _atomic_write(runs / f"run_{record.run_index:03d}.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    for algo, per_task in record.traces.items():
        tdir = out / "traces" / f"run_{record.run_index:03d}" / algo
        tdir.mkdir(parents=True, exist_ok=True)
        for name, trace in per_task.items():
            write_trace(tdir / f"{name}.csv", trace)


def write_results_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "best_fitness": repr(float(row["best_fitness"]))})


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """Run every (run, algorithm) pair and collect per-task best fitness.

    Run ``r`` uses seed ``base_seed + r`` for all algorithms. Results are
    written to ``plan.out_dir`` when set; if the plan aborts midway the rows
    gathered so far are flushed and ``status.json`` marks it incomplete.
    """
    scenario = validate_scenario(plan.manifest)
    out = Path(plan.out_dir) if plan.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    records: list[RunRecord] = []
    error = None
    try:
        if plan.workers > 1:
            with ProcessPoolExecutor(plan.workers) as pool:
                jobs = [(plan, r) for r in range(plan.run_count)]
                for record in pool.map(_worker, jobs):
                    records.append(record)
                    if out is not None:
                        _persist_run(out, record)
        else:
            for r in range(plan.run_count):
                record = run_single(plan, scenario, r)
                log.info("run %d/%d done", r + 1, plan.run_count)
                records.append(record)
                if out is not None:
                    _persist_run(out, record)
    except BaseException as exc:
        error = exc
        raise
    finally:
        rows = [row for rec in records for row in rec.rows]
        if out is not None:
            write_results_csv(out / "results.csv", rows)
            status = {
                "complete": error is None,
                "runs_completed": len(records),
                "run_count": plan.run_count,
                "error": None if error is None else f"{type(error).__name__}: {error}",
                "plan": asdict(plan),
            }
            _atomic_write(out / "status.json", json.dumps(status, indent=2, sort_keys=True) + "\n")
    matrix = ResultMatrix()
    for row in rows:
        matrix.add(row["algorithm"], row["instance"], row["best_fitness"])
    return ExperimentResult(matrix, rows, records)
