"""Coevolutionary VNS for multitask community detection on weighted digraphs."""

__version__ = "0.1.0"

from covns.graph import WeightedDigraph, build_graph, modularity, modularity_delta  # noqa: E402
from covns.partition import Partition, decode, random_partition, repair  # noqa: E402
from covns.operators import OperatorKind, apply_operator  # noqa: E402
from covns.vns import VnsConfig, solve_svns, vns_iteration  # noqa: E402
from covns.multitask import MigrationPolicy, solve_covns, solve_pvns  # noqa: E402

__all__ = [
    "MigrationPolicy",
    "OperatorKind",
    "Partition",
    "VnsConfig",
    "WeightedDigraph",
    "apply_operator",
    "build_graph",
    "decode",
    "modularity",
    "modularity_delta",
    "random_partition",
    "repair",
    "solve_covns",
    "solve_pvns",
    "solve_svns",
    "vns_iteration",
]
