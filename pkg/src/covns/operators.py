"""CE/CC neighbourhood moves on label vectors.

``CE`` extracts nodes and drops each one into another existing community;
``CC`` may also open a fresh singleton community. The digit is the number of
nodes moved per application.
"""

from __future__ import annotations

import enum

import numpy as np

from covns import kernels
from covns.partition import Partition


class OperatorKind(enum.Enum):
    CE1 = ("ce", 1, kernels.CE1)
    CE3 = ("ce", 3, kernels.CE3)
    CC1 = ("cc", 1, kernels.CC1)
    CC3 = ("cc", 3, kernels.CC3)

    def __init__(self, family, arity, code):
        self.family = family
        self.arity = arity
        self.code = code

    @property
    def token(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, token: str) -> "OperatorKind":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(
                f"unknown operator {token!r}; choose from {', '.join(k.token for k in cls)}"
            ) from None


ALL_OPERATORS = tuple(OperatorKind)


def operator_codes(kinds) -> np.ndarray:
    kinds = list(kinds)
    if not kinds:
        raise ValueError("operator set must not be empty")
    return np.array([k.code for k in kinds], dtype=np.int64)


def apply_operator(kind: OperatorKind, p: Partition, rng) -> Partition:
    """Return one successor of ``p``; draws six uniforms from ``rng``.

    Node picks use the first three draws, reinsertion targets the last three
    (only the first ``kind.arity`` of each group matter).
    """
    u = np.empty(kernels.UNIFORMS_PER_MOVE)
    u[0] = 0.0
    u[1:] = rng.random(kernels.UNIFORMS_PER_MOVE - 1)
    labels = np.array(p.labels, dtype=np.int64)
    kernels.active.successor(labels, kind.arity, kind.family == "cc", u)
    return Partition._trusted(labels)
