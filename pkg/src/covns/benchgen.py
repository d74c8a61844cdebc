"""Planted-partition benchmark chains (OI / UI multitask scenarios).

A scenario starts from a base graph with ``M`` planted communities and grows
it ``instance_count - 1`` times by ``increment`` nodes. In OI chains the new
nodes are appended, so every graph is a leading principal submatrix of its
successor; in UI chains they are prepended and the older nodes shift up.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from covns.graph import WeightedDigraph, graph_to_dict, read_graph
from covns.partition import Partition, repair

OI = "OI"
UI = "UI"
MANIFEST_NAME = "scenario.json"


@dataclass(frozen=True)
class GenSpec:
    base_node_count: int = 50
    increment: int = 5
    instance_count: int = 11
    communities_M: int = 8
    p_in: float = 0.85
    p_out: float = 0.15
    intra_weight_range: tuple[float, float] = (10.0, 20.0)
    inter_weight_range: tuple[float, float] = (0.0, 10.0)
    mode: str = OI
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", self.mode.upper())
        object.__setattr__(self, "intra_weight_range", tuple(map(float, self.intra_weight_range)))
        object.__setattr__(self, "inter_weight_range", tuple(map(float, self.inter_weight_range)))
        if self.mode not in (OI, UI):
            raise ValueError(f"mode must be OI or UI, got {self.mode!r}")
        if self.base_node_count < 1 or self.instance_count < 1:
            raise ValueError("base_node_count and instance_count must be positive")
        if self.instance_count > 1 and self.increment < 1:
            raise ValueError("increment must be positive when generating a chain")
        if not 1 <= self.communities_M <= self.base_node_count:
            raise ValueError(
                f"communities_M={self.communities_M} must lie in 1..{self.base_node_count}"
            )
        if not 0 <= self.p_out <= self.p_in <= 1:
            raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")
        for lo, hi in (self.intra_weight_range, self.inter_weight_range):
            if not 0 <= lo <= hi:
                raise ValueError(f"invalid weight range [{lo}, {hi})")

    def instance_name(self, node_count: int) -> str:
        return f"{self.mode}_{node_count}_{self.communities_M}"


@dataclass
class MultitaskScenario:
    names: list[str]
    graphs: list[WeightedDigraph]
    ground_truth: list[Partition | None]
    spec: GenSpec | None = None
    manifest: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.graphs)


def _sample_weights(same, u_link, u_weight, spec: GenSpec) -> np.ndarray:
    lo_in, hi_in = spec.intra_weight_range
    lo_out, hi_out = spec.inter_weight_range
    link = u_link < np.where(same, spec.p_in, spec.p_out)
    weight = np.where(same, lo_in + (hi_in - lo_in) * u_weight, lo_out + (hi_out - lo_out) * u_weight)
    return np.where(link, weight, 0.0)


def planted_truth(node_count: int, communities: int, rng) -> np.ndarray:
    """Random composition of the nodes into ``communities`` non-empty groups."""
    if communities > node_count:
        raise ValueError(f"cannot plant {communities} communities in {node_count} nodes")
    order = rng.permutation(node_count)
    cuts = np.sort(rng.choice(np.arange(1, node_count), communities - 1, replace=False))
    labels = np.empty(node_count, dtype=np.int64)
    for m, chunk in enumerate(np.split(order, cuts), start=1):
        labels[chunk] = m
    return labels


def generate_base(spec: GenSpec, rng) -> tuple[WeightedDigraph, Partition]:
    v = spec.base_node_count
    truth = planted_truth(v, spec.communities_M, rng)
    same = truth[:, None] == truth[None, :]
    u_link = rng.random((v, v))
    u_weight = rng.random((v, v))
    w = _sample_weights(same, u_link, u_weight, spec)
    np.fill_diagonal(w, 0.0)
    return WeightedDigraph(w), repair(truth)


def extend_instance(g: WeightedDigraph, truth: Partition, added: int, mode: str, spec: GenSpec, rng):
    """Grow ``g`` by ``added`` nodes; returns ``(graph, truth)``.

    New nodes join one of the existing communities uniformly at random and
    are wired to every other node with the planted-partition rule. The draws
    do not depend on ``mode``; only the placement of the new block does.
    """
    if added < 1:
        raise ValueError(f"added must be at least 1, got {added}")
    mode = mode.upper()
    if mode not in (OI, UI):
        raise ValueError(f"mode must be OI or UI, got {mode!r}")
    v = g.node_count
    n = v + added
    m = truth.n_communities
    new_comm = np.minimum((rng.random(added) * m).astype(np.int64), m - 1) + 1
    labels = np.concatenate([truth.labels, new_comm])
    u_link = rng.random((n, n))
    u_weight = rng.random((n, n))
    w = _sample_weights(labels[:, None] == labels[None, :], u_link, u_weight, spec)
    w[:v, :v] = g.weights
    np.fill_diagonal(w, 0.0)
    if mode == UI:
        order = np.concatenate([np.arange(v, n), np.arange(v)])
        w = w[np.ix_(order, order)]
        labels = labels[order]
    return WeightedDigraph(w), repair(labels)


def generate_scenario(spec: GenSpec, out_dir=None) -> MultitaskScenario:
    """Generate the whole chain; with ``out_dir`` also write graphs and manifest."""
    rng = np.random.default_rng(spec.seed)
    g, truth = generate_base(spec, rng)
    graphs, truths = [g], [truth]
    for _ in range(spec.instance_count - 1):
        g, truth = extend_instance(g, truth, spec.increment, spec.mode, spec, rng)
        graphs.append(g)
        truths.append(truth)
    names = [spec.instance_name(x.node_count) for x in graphs]
    scenario = MultitaskScenario(names, graphs, truths, spec)
    if out_dir is not None:
        write_scenario(scenario, out_dir)
    return scenario


def write_scenario(scenario: MultitaskScenario, out_dir, **solver_defaults) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for name, g, truth in zip(scenario.names, scenario.graphs, scenario.ground_truth):
            path = out_dir / f"{name}.json"
            path.write_text(json.dumps(graph_to_dict(g, truth)) + "\n")
            files.append(path.name)
        manifest = {
            "tasks": files,
            "names": list(scenario.names),
            "algorithm": "covns",
            "seed": 0,
            "n_per_deme": 10,
            "evals_per_individual": 1000,
            "freq_migr": 0.03,
            "prop": 0.05,
        }
        manifest.update(solver_defaults)
        if scenario.spec is not None:
            manifest["spec"] = asdict(scenario.spec)
        manifest_path = out_dir / MANIFEST_NAME
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write scenario to {out_dir}: {exc}") from exc
    scenario.manifest = manifest
    return manifest_path


def load_scenario(manifest_path) -> MultitaskScenario:
    """Read a manifest and every graph it lists (paths relative to the manifest)."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if not isinstance(manifest, dict) or not isinstance(manifest.get("tasks"), list):
        raise ValueError(f"{manifest_path}: manifest needs a 'tasks' list")
    base = manifest_path.parent
    graphs, truths, names = [], [], []
    for i, entry in enumerate(manifest["tasks"]):
        path = Path(entry)
        if not path.is_absolute():
            path = base / path
        g, truth = read_graph(path)
        graphs.append(g)
        truths.append(truth)
        given = manifest.get("names")
        names.append(given[i] if given and i < len(given) else path.stem)
    spec = GenSpec(**manifest["spec"]) if "spec" in manifest else None
    return MultitaskScenario(names, graphs, truths, spec, manifest)
