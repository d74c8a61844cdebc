"""Population-based discrete VNS loop and the single-task solver (sVNS)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from covns import kernels
from covns.graph import WeightedDigraph
from covns.operators import ALL_OPERATORS, OperatorKind, operator_codes
from covns.partition import Partition

DEFAULT_POPULATION = 10
DEFAULT_EVALS_PER_INDIVIDUAL = 1000


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class VnsConfig:
    """Search parameters shared by all three solvers.

    ``evaluation_budget`` is the per-task budget; it defaults to
    ``population_size * evals_per_individual``.
    """

    population_size: int = DEFAULT_POPULATION
    evals_per_individual: int = DEFAULT_EVALS_PER_INDIVIDUAL
    evaluation_budget: int | None = None
    operators: tuple[OperatorKind, ...] = ALL_OPERATORS
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be positive")
        if self.evaluation_budget is None:
            object.__setattr__(
                self, "evaluation_budget", self.population_size * self.evals_per_individual
            )
        if self.evaluation_budget < self.population_size:
            raise ValueError(
                f"evaluation_budget ({self.evaluation_budget}) must be at least "
                f"population_size ({self.population_size})"
            )
        object.__setattr__(self, "operators", tuple(self.operators))
        if not self.operators:
            raise ValueError("operator set must not be empty")


@dataclass(frozen=True)
class EvaluatedIndividual:
    partition: Partition
    fitness: float


class Deme:
    """Subpopulation bound to one task, with its own evaluation ledger.

    ``labels`` is an ``(N, D)`` array of canonical label vectors and
    ``fitness`` their modularity on ``graph``. Every evaluation charged to
    the deme is logged in order, which yields the evaluation-indexed trace.
    """

    def __init__(self, graph: WeightedDigraph, labels, fitness, budget: int, task_index: int = 0):
        self.graph = graph
        self.task_index = task_index
        self.labels = np.ascontiguousarray(labels, dtype=np.int64)
        self.fitness = np.ascontiguousarray(fitness, dtype=np.float64)
        if self.labels.shape != (self.fitness.shape[0], graph.node_count):
            raise ValueError(
                f"deme labels have shape {self.labels.shape}, expected "
                f"({self.fitness.shape[0]}, {graph.node_count})"
            )
        self.budget = int(budget)
        self.evaluations = 0
        self._log: list[np.ndarray] = []
        self.best: EvaluatedIndividual | None = None
        self.refresh_best()

    def __len__(self):
        return self.labels.shape[0]

    @property
    def remaining(self) -> int:
        return self.budget - self.evaluations

    @property
    def individuals(self) -> list[EvaluatedIndividual]:
        return [
            EvaluatedIndividual(Partition._trusted(row), float(f))
            for row, f in zip(self.labels, self.fitness)
        ]

    def charge(self, values) -> None:
        values = np.atleast_1d(np.asarray(values, dtype=np.float64)).copy()
        if self.evaluations + values.shape[0] > self.budget:
            raise BudgetExhausted(
                f"deme {self.task_index}: {values.shape[0]} evaluations exceed the "
                f"remaining budget {self.remaining}"
            )
        self._log.append(values)
        self.evaluations += values.shape[0]

    def refresh_best(self) -> None:
        i = int(np.argmax(self.fitness))
        if self.best is None or self.fitness[i] > self.best.fitness:
            self.best = EvaluatedIndividual(Partition._trusted(self.labels[i]), float(self.fitness[i]))

    def best_index(self) -> int:
        return int(np.argmax(self.fitness))

    def worst_index(self) -> int:
        return int(np.argmin(self.fitness))

    def evaluated(self) -> np.ndarray:
        """Raw fitness of every charged evaluation, in order."""
        if not self._log:
            return np.zeros(0)
        return np.concatenate(self._log)

    def trace(self) -> np.ndarray:
        """Best fitness seen after each charged evaluation."""
        return np.maximum.accumulate(self.evaluated())


@dataclass
class TaskResult:
    task_index: int
    best: EvaluatedIndividual
    trace: np.ndarray = field(repr=False)
    evaluations: int

    @property
    def best_fitness(self) -> float:
        return self.best.fitness


def evaluate(graph: WeightedDigraph, labels: np.ndarray, backend=None) -> float:
    kb = backend or kernels.active
    return kb.modularity(graph.modularity_matrix, graph.total_weight, labels)


def random_pool(rng, size: int, node_count: int) -> np.ndarray:
    """``size`` canonical random label vectors; same draws as repeated random_partition."""
    u = rng.random((size, node_count))
    pool = np.minimum((u * node_count).astype(np.int64), node_count - 1) + 1
    for row in pool:
        kernels.active.repair(row)
    return pool


def draw_moves(deme: Deme, rng) -> np.ndarray:
    n = min(len(deme), deme.remaining)
    if n <= 0:
        raise BudgetExhausted(f"deme {deme.task_index} has no evaluations left")
    return rng.random((n, kernels.UNIFORMS_PER_MOVE))


def run_moves(deme: Deme, uniforms: np.ndarray, ops: np.ndarray, backend=None) -> None:
    kb = backend or kernels.active
    out = np.empty(uniforms.shape[0])
    g = deme.graph
    kb.sweep(g.modularity_matrix, g.total_weight, deme.labels, deme.fitness, uniforms, ops, out)
    deme.charge(out)
    deme.refresh_best()


def vns_iteration(deme: Deme, rng, operators=ALL_OPERATORS, backend=None) -> Deme:
    """One VNS pass: every slot proposes one successor, kept only if strictly better.

    If the budget runs out partway, only the leading slots are processed.
    """
    run_moves(deme, draw_moves(deme, rng), operator_codes(operators), backend)
    return deme


def solve_svns(graph: WeightedDigraph, cfg: VnsConfig, backend=None) -> TaskResult:
    """Solve a single task with ``cfg.population_size`` individuals.

    The initial population is counted against ``cfg.evaluation_budget``.
    """
    graph.require_positive_weight()
    rng = np.random.default_rng(cfg.seed)
    pool = random_pool(rng, cfg.population_size, graph.node_count)
    fitness = np.array([evaluate(graph, row, backend) for row in pool])
    deme = Deme(graph, pool, fitness, cfg.evaluation_budget)
    deme.charge(fitness)
    ops = operator_codes(cfg.operators)
    while deme.remaining > 0:
        run_moves(deme, draw_moves(deme, rng), ops, backend)
    return TaskResult(0, deme.best, deme.trace(), deme.evaluations)


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["evaluation_index", "best_fitness_so_far"])
        for i, value in enumerate(np.asarray(trace).tolist(), start=1):
            writer.writerow([i, repr(value)])


def read_trace(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["best_fitness_so_far"]) for r in rows])

