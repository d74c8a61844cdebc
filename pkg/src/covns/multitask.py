"""Multi-deme solvers: CoVNS (with migration) and pVNS (without).

One deme per task. Demes iterate in lockstep; every ``interval`` evaluations
per deme a migration epoch copies elite individuals between demes, resizing
label vectors to the receiving task's node count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from covns import kernels
from covns.graph import WeightedDigraph
from covns.operators import operator_codes
from covns.partition import Partition
from covns.vns import (
    Deme,
    TaskResult,
    VnsConfig,
    draw_moves,
    evaluate,
    random_pool,
    run_moves,
)

PULL = "pull"
PUSH = "push"


@dataclass(frozen=True)
class MigrationPolicy:
    freq_migr: float = 0.03
    prop: float = 0.05
    direction: str = PULL

    def __post_init__(self):
        if not 0 < self.freq_migr < 1:
            raise ValueError(f"freq_migr must lie in (0, 1), got {self.freq_migr}")
        if not 0 < self.prop <= 1:
            raise ValueError(f"prop must lie in (0, 1], got {self.prop}")
        if self.direction not in (PULL, PUSH):
            raise ValueError(f"direction must be 'pull' or 'push', got {self.direction!r}")

    def migrants(self, deme_size: int) -> int:
        return max(1, round(deme_size * self.prop))

    def interval(self, deme_budget: int) -> int:
        # tolerance absorbs products like 0.07 * 100 = 7.000000000000001
        return max(1, math.ceil(self.freq_migr * deme_budget - 1e-9))


def resize_labels(x, target_length: int, replaced=None) -> np.ndarray:
    """Array-level :func:`resize_solution`; returns a fresh canonical int64 vector."""
    x = np.asarray(x, dtype=np.int64)
    if target_length <= x.shape[0]:
        out = x[:target_length].copy()
    else:
        if replaced is None or len(replaced) != target_length:
            raise ValueError("growing a solution needs a replaced individual of the target length")
        rep = np.asarray(getattr(replaced, "labels", replaced), dtype=np.int64)
        out = np.concatenate([x, rep[x.shape[0]:]])
    kernels.active.repair(out)
    return out


def resize_solution(x, target_length: int, replaced=None) -> Partition:
    """Fit ``x`` to ``target_length`` nodes.

    Shorter targets keep the leading labels. Longer targets copy the missing
    tail positions from ``replaced``, the individual being overwritten in
    the receiving deme. The result is repaired either way.
    """
    return Partition._trusted(resize_labels(getattr(x, "labels", x), target_length, replaced))


def initialize_demes(tasks, total_pop: int, rng, budget: int | None = None, backend=None):
    """Build one deme per task from a shared random pool.

    ``total_pop`` individuals are drawn at the largest task size and scored on
    every task. Deme ``k`` keeps the ``total_pop // K`` best for task ``k``
    (in pool order); an individual may land in several demes. The ``total_pop``
    evaluations on task ``k`` are charged to deme ``k``.
    """
    tasks = list(tasks)
    if not tasks:
        raise ValueError("no tasks given")
    k_count = len(tasks)
    if total_pop % k_count:
        raise ValueError(f"population {total_pop} is not divisible by the task count {k_count}")
    per_deme = total_pop // k_count
    if per_deme < 1:
        raise ValueError("each deme needs at least one individual")
    if budget is None:
        budget = np.iinfo(np.int64).max
    if budget < total_pop:
        raise ValueError(
            f"per-task budget {budget} cannot cover the {total_pop} initial evaluations"
        )
    d_max = max(g.node_count for g in tasks)
    pool = random_pool(rng, total_pop, d_max)
    demes = []
    for k, g in enumerate(tasks):
        local = np.array([resize_labels(row, g.node_count) for row in pool])
        fit = np.array([evaluate(g, row, backend) for row in local])
        keep = np.sort(np.argsort(-fit, kind="stable")[:per_deme])
        deme = Deme(g, local[keep], fit[keep], budget, task_index=k)
        deme.charge(fit)
        demes.append(deme)
    return demes


def migrate(demes, policy: MigrationPolicy, rng, backend=None) -> int:
    """Run one migration epoch in deme-index order; returns migrant evaluations.

    Pull: deme ``k`` overwrites its worst slot with the best of a random other
    deme. Push: deme ``k`` sends its best individuals into the worst slots of
    random other demes. Each migrant is scored on its new task and charged to
    the receiving deme; demes with no budget left receive nothing.
    """
    k_count = len(demes)
    if k_count < 2:
        return 0
    count = 0

    def place(dst: Deme, x):
        w = dst.worst_index()
        y = resize_labels(x, dst.graph.node_count, dst.labels[w])
        q = evaluate(dst.graph, y, backend)
        dst.charge(q)
        dst.labels[w] = y
        dst.fitness[w] = q
        dst.refresh_best()

    for k, deme in enumerate(demes):
        others = [j for j in range(k_count) if j != k]
        m = policy.migrants(len(deme))
        if policy.direction == PULL:
            for _ in range(m):
                src = demes[others[min(int(rng.random() * len(others)), len(others) - 1)]]
                if deme.remaining <= 0:
                    continue
                place(deme, src.labels[src.best_index()].copy())
                count += 1
        else:
            order = np.argsort(-deme.fitness, kind="stable")
            elites = [deme.labels[i].copy() for i in order[:m]]
            for j in range(m):
                dst = demes[others[min(int(rng.random() * len(others)), len(others) - 1)]]
                if dst.remaining <= 0:
                    continue
                place(dst, elites[j % len(elites)])
                count += 1
    return count


@dataclass
class MultitaskResult:
    tasks: list[TaskResult]
    migration_epochs: int = 0
    migrant_evaluations: int = 0
    demes: list[Deme] = field(default_factory=list, repr=False)

    @property
    def total_evaluations(self) -> int:
        return sum(t.evaluations for t in self.tasks)


def _check_tasks(tasks) -> list[WeightedDigraph]:
    tasks = list(tasks)
    if not tasks:
        raise ValueError("no tasks given")
    for g in tasks:
        g.require_positive_weight()
    return tasks


def solve_covns(
    tasks,
    cfg: VnsConfig,
    policy: MigrationPolicy | None = MigrationPolicy(),
    workers: int = 1,
    backend=None,
) -> MultitaskResult:
    """Solve all tasks jointly; ``policy=None`` disables migration (pVNS).

    Each deme has ``cfg.population_size`` slots and a budget of
    ``cfg.evaluation_budget`` evaluations, so the run spends
    ``K * cfg.evaluation_budget`` in total. With ``workers > 1`` the demes'
    kernels run on a thread pool between migration barriers; random draws
    are still taken in deme order, so results do not depend on ``workers``.
    """
    tasks = _check_tasks(tasks)
    k_count = len(tasks)
    rng = np.random.default_rng(cfg.seed)
    demes = initialize_demes(tasks, k_count * cfg.population_size, rng, cfg.evaluation_budget, backend)
    ops = operator_codes(cfg.operators)

    migrating = policy is not None and k_count > 1
    interval = policy.interval(cfg.evaluation_budget) if migrating else 0
    next_epoch = interval * (min(d.evaluations for d in demes) // interval + 1) if migrating else 0
    epochs = 0
    migrants = 0

    pool = ThreadPoolExecutor(workers) if workers > 1 and k_count > 1 else None
    try:
        while any(d.remaining > 0 for d in demes):
            moves = [draw_moves(d, rng) if d.remaining > 0 else None for d in demes]
            jobs = [(d, u) for d, u in zip(demes, moves) if u is not None]
            if pool is None:
                for d, u in jobs:
                    run_moves(d, u, ops, backend)
            else:
                list(pool.map(lambda job: run_moves(job[0], job[1], ops, backend), jobs))
            if migrating:
                done = min(d.evaluations for d in demes)
                if done >= next_epoch and any(d.remaining > 0 for d in demes):
                    migrants += migrate(demes, policy, rng, backend)
                    epochs += 1
                    next_epoch = interval * (min(d.evaluations for d in demes) // interval + 1)
    finally:
        if pool is not None:
            pool.shutdown()

    results = [TaskResult(d.task_index, d.best, d.trace(), d.evaluations) for d in demes]
    return MultitaskResult(results, epochs, migrants, demes)


def solve_pvns(tasks, cfg: VnsConfig, workers: int = 1, backend=None) -> MultitaskResult:
    """Independent demes sharing only the initial pool."""
    return solve_covns(tasks, cfg, None, workers, backend)
