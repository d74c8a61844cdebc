"""Run aggregation, Friedman mean ranks and Holm post-hoc p-values."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class ResultsFormatError(ValueError):
    pass


@dataclass
class ResultMatrix:
    """Run fitness values per (algorithm, instance); names keep insertion order."""

    algorithms: list[str] = field(default_factory=list)
    instances: list[str] = field(default_factory=list)
    cells: dict[tuple[str, str], list[float]] = field(default_factory=dict)

    def add(self, algorithm: str, instance: str, fitness: float) -> None:
        if algorithm not in self.algorithms:
            self.algorithms.append(algorithm)
        if instance not in self.instances:
            self.instances.append(instance)
        self.cells.setdefault((algorithm, instance), []).append(float(fitness))

    def cell(self, algorithm: str, instance: str) -> list[float]:
        try:
            return self.cells[(algorithm, instance)]
        except KeyError:
            raise KeyError(f"no runs for algorithm {algorithm!r} on instance {instance!r}") from None

    def validate(self) -> None:
        counts = set()
        for a in self.algorithms:
            for i in self.instances:
                runs = self.cells.get((a, i))
                if not runs:
                    raise ResultsFormatError(f"missing cell ({a}, {i})")
                counts.add(len(runs))
        if len(counts) > 1:
            raise ResultsFormatError(f"unequal run counts across cells: {sorted(counts)}")

    def means(self) -> np.ndarray:
        """``(algorithms, instances)`` array of per-cell mean fitness."""
        self.validate()
        return np.array(
            [[aggregate(self.cells[(a, i)])[0] for i in self.instances] for a in self.algorithms]
        )


@dataclass
class StatsReport:
    control: str | None
    mean_ranks: dict[str, float]
    unadjusted_p: dict[str, float]
    adjusted_p: dict[str, float]
    n_instances: int


def aggregate(runs) -> tuple[float, float, float]:
    """Mean, best (maximum) and population standard deviation of a cell."""
    x = np.asarray(runs, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot aggregate an empty list of runs")
    return float(x.mean()), float(x.max()), float(x.std())


def friedman_ranks(means) -> np.ndarray:
    """Mean rank per algorithm (row) over instances (columns).

    Rank 1 is the highest mean fitness on an instance; tied algorithms share
    the average of the positions they occupy.
    """
    m = np.asarray(means, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 1:
        raise ValueError(f"need a (k >= 2, n >= 1) matrix of means, got shape {m.shape}")
    if np.any(np.isnan(m)):
        raise ValueError("missing cell in the mean matrix")
    k, n = m.shape
    ranks = np.empty((k, n))
    for j in range(n):
        col = m[:, j]
        for a in range(k):
            better = np.count_nonzero(col > col[a])
            tied = np.count_nonzero(col == col[a])
            ranks[a, j] = better + (tied + 1) / 2.0
    return ranks.mean(axis=1)


def normal_sf(z: float) -> float:
    """Upper tail of the standard normal, via the complementary error function."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def holm_posthoc(mean_ranks: dict, n_instances: int, control: str):
    """Compare every algorithm with ``control``.

    Returns ``(unadjusted, adjusted)`` dicts keyed by algorithm name. The test
    statistic is the rank difference over ``sqrt(k(k+1)/(6n))``; p-values are
    two-sided normal, adjusted with Holm's step-down procedure.
    """
    if control not in mean_ranks:
        raise KeyError(f"control {control!r} not among {list(mean_ranks)}")
    k = len(mean_ranks)
    if k < 2 or n_instances < 1:
        raise ValueError("need at least two algorithms and one instance")
    se = math.sqrt(k * (k + 1) / (6.0 * n_instances))
    names = [a for a in mean_ranks if a != control]
    unadjusted = {
        a: 2.0 * normal_sf(abs(mean_ranks[a] - mean_ranks[control]) / se) for a in names
    }
    m = len(names)
    adjusted = {}
    running = 0.0
    for i, a in enumerate(sorted(names, key=lambda name: unadjusted[name])):
        running = max(running, min(1.0, (m - i) * unadjusted[a]))
        adjusted[a] = running
    return unadjusted, adjusted


def analyze(matrix: ResultMatrix, control: str | None = None) -> StatsReport:
    means = matrix.means()
    algos = matrix.algorithms
    n = len(matrix.instances)
    if len(algos) == 1:
        return StatsReport(None, {algos[0]: 1.0}, {}, {}, n)
    ranks = dict(zip(algos, friedman_ranks(means).tolist()))
    if control is None:
        control = min(ranks, key=ranks.get)
    unadj, adj = holm_posthoc(ranks, n, control)
    return StatsReport(control, ranks, unadj, adj, n)


FITNESS_COLUMNS = ("fitness", "best_fitness")


def read_results_csv(source) -> ResultMatrix:
    """Parse ``algorithm,instance,run_index,fitness`` rows (``best_fitness`` also accepted).

    ``source`` is a path or an open text file.
    """
    if not hasattr(source, "read"):
        with open(source, newline="") as fh:
            return read_results_csv(fh)
    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    column = next((c for c in FITNESS_COLUMNS if c in header), None)
    missing = [c for c in ("algorithm", "instance", "run_index") if c not in header]
    if missing or column is None:
        raise ResultsFormatError(
            f"line 1: header needs algorithm, instance, run_index and fitness; got {header}"
        )
    matrix = ResultMatrix()
    for row in reader:
        line = reader.line_num
        if None in row or any(row.get(c) in (None, "") for c in ("algorithm", "instance", column)):
            raise ResultsFormatError(f"line {line}: malformed row {row}")
        try:
            int(row["run_index"])
            value = float(row[column])
        except ValueError:
            raise ResultsFormatError(f"line {line}: non-numeric run_index or fitness") from None
        if not math.isfinite(value):
            raise ResultsFormatError(f"line {line}: fitness is not finite")
        matrix.add(row["algorithm"], row["instance"], value)
    if not matrix.cells:
        raise ResultsFormatError("no result rows")
    return matrix


def report_rows(matrix: ResultMatrix, report: StatsReport) -> list[dict]:
    """Flat records for CSV export: one per cell, then one per algorithm."""
    rows = []
    for a in matrix.algorithms:
        for i in matrix.instances:
            mean, best, std = aggregate(matrix.cell(a, i))
            rows.append({"section": "cell", "algorithm": a, "instance": i,
                         "mean": mean, "best": best, "std": std})
    for a in matrix.algorithms:
        rows.append({"section": "rank", "algorithm": a,
                     "mean_rank": report.mean_ranks[a],
                     "unadjusted_p": report.unadjusted_p.get(a, ""),
                     "adjusted_p": report.adjusted_p.get(a, "")})
    return rows


def write_report_csv(path, matrix: ResultMatrix, report: StatsReport) -> None:
    fields = ["section", "algorithm", "instance", "mean", "best", "std",
              "mean_rank", "unadjusted_p", "adjusted_p"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in report_rows(matrix, report):
            writer.writerow(row)


def format_report(matrix: ResultMatrix, report: StatsReport, digits: int = 3) -> str:
    """Plain-text tables: mean/best/std per cell, then ranks and post-hoc p-values."""
    name_w = max(len(a) for a in matrix.algorithms) + 2
    col_w = max(max(len(i) for i in matrix.instances), digits + 3) + 2
    out = []
    head = " " * (name_w + 6) + "".join(i.rjust(col_w) for i in matrix.instances)
    out.append(head)
    out.append("-" * len(head))
    for a in matrix.algorithms:
        stats = [aggregate(matrix.cell(a, i)) for i in matrix.instances]
        for label, idx in (("mean", 0), ("best", 1), ("std", 2)):
            lead = (a if idx == 0 else "").ljust(name_w) + label.ljust(6)
            out.append(lead + "".join(f"{s[idx]:.{digits}f}".rjust(col_w) for s in stats))
        out.append("")
    out.append("Friedman mean ranks" + (f" (control: {report.control})" if report.control else ""))
    has_posthoc = bool(report.unadjusted_p)
    line = "algorithm".ljust(name_w) + "rank".rjust(10)
    if has_posthoc:
        line += "unadjusted p".rjust(16) + "adjusted p".rjust(14)
    out.append(line)
    for a in matrix.algorithms:
        line = a.ljust(name_w) + f"{report.mean_ranks[a]:.4f}".rjust(10)
        if has_posthoc:
            if a in report.unadjusted_p:
                line += f"{report.unadjusted_p[a]:.6f}".rjust(16) + f"{report.adjusted_p[a]:.6f}".rjust(14)
            else:
                line += "--".rjust(16) + "--".rjust(14)
        out.append(line)
    return "\n".join(out)
