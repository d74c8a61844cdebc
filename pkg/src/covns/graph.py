"""Weighted directed graphs and their modularity."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from covns import kernels


class GraphError(ValueError):
    """Raised for malformed graph input."""


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Dense weighted digraph without self-loops.

    Node ``v`` (0-based here, 1-based in files) has in-strength
    ``in_strength[v]`` (column sum) and out-strength ``out_strength[v]``
    (row sum). The matrix is read-only after construction.
    """

    weights: np.ndarray
    in_strength: np.ndarray = field(init=False)
    out_strength: np.ndarray = field(init=False)
    total_weight: float = field(init=False)
    # entry (v, v') = w[v, v'] - s_in[v] * s_out[v'] / total; None for empty graphs
    modularity_matrix: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise GraphError(f"weights must be a non-empty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            raise GraphError("weights must be non-negative")
        if np.any(np.diag(w) != 0):
            v = int(np.flatnonzero(np.diag(w))[0]) + 1
            raise GraphError(f"self-loop on node {v}")
        w.setflags(write=False)
        s_in, s_out, total = kernels.active.strengths(w)
        s_in.setflags(write=False)
        s_out.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "in_strength", s_in)
        object.__setattr__(self, "out_strength", s_out)
        object.__setattr__(self, "total_weight", float(total))
        b = None
        if total > 0:
            b = w - np.outer(s_in, s_out) / total
            b.setflags(write=False)
        object.__setattr__(self, "modularity_matrix", b)

    @property
    def node_count(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None

    def require_positive_weight(self):
        if not self.total_weight > 0:
            raise GraphError("graph has zero total weight; modularity is undefined")

    def edges(self) -> list[tuple[int, int, float]]:
        """Non-zero entries as 1-based ``(source, target, weight)`` in row-major order."""
        rows, cols = np.nonzero(self.weights)
        return [(int(r) + 1, int(c) + 1, float(self.weights[r, c])) for r, c in zip(rows, cols)]


def build_graph(edges: Iterable[Sequence], node_count: int) -> WeightedDigraph:
    """Build a graph from 1-based ``(source, target, weight)`` triples.

    Pairs that are not listed get weight 0. Self-loops, negative weights,
    out-of-range indices and repeated pairs are rejected.
    """
    if int(node_count) != node_count or node_count < 1:
        raise GraphError(f"node_count must be a positive integer, got {node_count!r}")
    node_count = int(node_count)
    w = np.zeros((node_count, node_count))
    seen = set()
    for i, edge in enumerate(edges):
        try:
            src, dst, weight = edge
        except (TypeError, ValueError):
            raise GraphError(f"edge #{i}: expected (source, target, weight), got {edge!r}") from None
        if int(src) != src or int(dst) != dst:
            raise GraphError(f"edge #{i}: node indices must be integers, got {edge!r}")
        src, dst, weight = int(src), int(dst), float(weight)
        if not (1 <= src <= node_count and 1 <= dst <= node_count):
            raise GraphError(f"edge #{i}: index out of range 1..{node_count}: {edge!r}")
        if src == dst:
            raise GraphError(f"edge #{i}: self-loop on node {src}")
        if not weight >= 0 or not np.isfinite(weight):
            raise GraphError(f"edge #{i}: weight must be a non-negative finite number, got {weight}")
        if (src, dst) in seen:
            raise GraphError(f"edge #{i}: duplicate pair ({src}, {dst})")
        seen.add((src, dst))
        w[src - 1, dst - 1] = weight
    return WeightedDigraph(w)


def _labels_array(g: WeightedDigraph, partition) -> np.ndarray:
    labels = np.asarray(getattr(partition, "labels", partition), dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != g.node_count:
        raise GraphError(
            f"partition length {labels.shape[0] if labels.ndim == 1 else labels.shape} "
            f"does not match node count {g.node_count}"
        )
    return labels


def modularity(g: WeightedDigraph, partition) -> float:
    """Weighted directed modularity of ``partition`` on ``g``.

    ``partition`` is a :class:`~covns.partition.Partition` or any label
    vector of length ``g.node_count``. Only label equality matters.
    """
    labels = _labels_array(g, partition)
    g.require_positive_weight()
    return kernels.active.modularity(g.modularity_matrix, g.total_weight, labels)


def modularity_delta(g: WeightedDigraph, partition, node: int, new_label: int) -> float:
    """Change in modularity when 0-based ``node`` moves to ``new_label``.

    ``new_label`` may be a label not present in the partition, which opens
    a new singleton community.
    """
    labels = _labels_array(g, partition)
    g.require_positive_weight()
    if not 0 <= node < g.node_count:
        raise GraphError(f"node index {node} out of range 0..{g.node_count - 1}")
    if new_label < 1:
        raise GraphError(f"labels must be positive, got {new_label}")
    return kernels.active.delta(g.modularity_matrix, g.total_weight, labels, int(node), int(new_label))


def graph_to_dict(g: WeightedDigraph, ground_truth=None) -> dict:
    doc = {"node_count": g.node_count, "edges": [list(e) for e in g.edges()]}
    if ground_truth is not None:
        doc["ground_truth"] = [int(x) for x in getattr(ground_truth, "labels", ground_truth)]
    return doc


def graph_from_dict(doc: dict):
    """Inverse of :func:`graph_to_dict`; returns ``(graph, ground_truth or None)``."""
    from covns.partition import repair

    if not isinstance(doc, dict) or "node_count" not in doc or "edges" not in doc:
        raise GraphError("graph document needs 'node_count' and 'edges'")
    g = build_graph(doc["edges"], doc["node_count"])
    truth = doc.get("ground_truth")
    if truth is not None:
        if len(truth) != g.node_count:
            raise GraphError("ground_truth length does not match node_count")
        truth = repair(truth)
    return g, truth


def write_graph(path, g: WeightedDigraph, ground_truth=None) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g, ground_truth)) + "\n")


def read_graph(path):
    """Read a graph JSON file; returns ``(graph, ground_truth or None)``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON: {exc}") from None
    try:
        return graph_from_dict(doc)
    except GraphError as exc:
        raise GraphError(f"{path}: {exc}") from None
