"""Label-vector encoding of graph partitions."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from covns import kernels


class PartitionError(ValueError):
    pass


class Partition:
    """Canonical label vector: node ``v`` belongs to community ``labels[v]``.

    Labels are 1-based and appear in first-occurrence order, so two label
    vectors describing the same set partition compare equal. Build one with
    :func:`repair` when the input may not be canonical.
    """

    __slots__ = ("labels",)

    def __init__(self, labels):
        arr = np.array(labels, dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] == 0:
            raise PartitionError("a partition needs a non-empty 1-d label vector")
        if not is_canonical(arr):
            raise PartitionError(f"labels are not canonical: {arr.tolist()}")
        arr.setflags(write=False)
        self.labels = arr

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "Partition":
        p = object.__new__(cls)
        arr = np.array(arr, dtype=np.int64)
        arr.setflags(write=False)
        p.labels = arr
        return p

    def __len__(self):
        return self.labels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition({self.labels.tolist()})"

    @property
    def n_communities(self) -> int:
        return int(self.labels.max())

    def tolist(self) -> list[int]:
        return self.labels.tolist()

    def decode(self) -> list[set[int]]:
        return decode(self)


def is_canonical(labels) -> bool:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] == 0:
        return False
    top = 0
    for lab in arr.tolist():
        if lab > top + 1 or lab < 1:
            return False
        top = max(top, lab)
    return True


def repair(labels) -> Partition:
    """Renumber labels by first occurrence.

    >>> repair([2, 3, 3, 4, 4, 2, 2, 3, 4, 4]).tolist()
    [1, 2, 2, 3, 3, 1, 1, 2, 3, 3]
    """
    raw = getattr(labels, "labels", labels)
    arr = np.array(raw, dtype=np.int64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise PartitionError("cannot repair an empty label vector")
    if np.any(np.asarray(raw) != arr):
        raise PartitionError("labels must be integers")
    if np.any(arr < 1):
        raise PartitionError(f"labels must be positive integers, got {arr.min()}")
    kernels.active.repair(arr)
    return Partition._trusted(arr)


def decode(p) -> list[set[int]]:
    """Communities as sets of 1-based node indices, in label order.

    Plain label sequences are repaired first.
    """
    if not isinstance(p, Partition):
        p = repair(p)
    groups: list[set[int]] = [set() for _ in range(p.n_communities)]
    for v, lab in enumerate(p.labels.tolist(), start=1):
        groups[lab - 1].add(v)
    return groups


def encode(communities, node_count: int) -> Partition:
    """Label vector for a list of disjoint 1-based node sets covering all nodes."""
    labels = np.zeros(node_count, dtype=np.int64)
    for m, group in enumerate(communities, start=1):
        for v in group:
            if labels[v - 1]:
                raise PartitionError(f"node {v} appears in more than one community")
            labels[v - 1] = m
    if np.any(labels == 0):
        raise PartitionError("communities do not cover every node")
    return repair(labels)


def random_partition(node_count: int, rng: np.random.Generator) -> Partition:
    """Each node gets an independent uniform label in 1..node_count, then repair."""
    if node_count < 1:
        raise PartitionError("node_count must be at least 1")
    return repair(random_labels(node_count, rng))


def random_labels(node_count: int, rng) -> np.ndarray:
    u = rng.random(node_count)
    return np.minimum((u * node_count).astype(np.int64), node_count - 1) + 1


def write_partition(path, p: Partition) -> None:
    Path(path).write_text(json.dumps(p.tolist()) + "\n")


def read_partition(path) -> Partition:
    return repair(json.loads(Path(path).read_text()))
