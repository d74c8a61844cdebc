import os
import subprocess
import sys

import numpy as np
import pytest

from covns import kernels
from covns.benchgen import GenSpec, generate_scenario
from covns.graph import WeightedDigraph
from covns.multitask import solve_covns
from covns.vns import VnsConfig, solve_svns

from conftest import random_weights

fast = kernels.numba_backend
slow = kernels.numpy_backend
needs_numba = pytest.mark.skipif(fast is None, reason="numba not installed")


@needs_numba
def test_strengths_and_modularity_bitwise(rng):
    for _ in range(30):
        n = int(rng.integers(2, 40))
        w = random_weights(rng, n)
        a, b = fast.strengths(w), slow.strengths(w)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and a[2] == b[2]
        g = WeightedDigraph(w)
        labels = rng.integers(1, 5, n).astype(np.int64)
        bm = g.modularity_matrix
        assert fast.modularity(bm, g.total_weight, labels) == slow.modularity(bm, g.total_weight, labels)
        node, new = int(rng.integers(n)), int(rng.integers(1, 6))
        assert fast.delta(bm, g.total_weight, labels, node, new) == pytest.approx(
            slow.delta(bm, g.total_weight, labels, node, new), abs=1e-12)


@needs_numba
def test_repair_and_successor_agree(rng):
    for _ in range(200):
        n = int(rng.integers(1, 15))
        x = rng.integers(1, 9, n).astype(np.int64)
        y = x.copy()
        assert fast.repair(x) == slow.repair(y)
        assert np.array_equal(x, y)
        u = rng.random(7)
        arity, is_cc = int(rng.choice([1, 3])), bool(rng.integers(2))
        fast.successor(x, arity, is_cc, u)
        slow.successor(y, arity, is_cc, u)
        assert np.array_equal(x, y)


@needs_numba
def test_solver_traces_identical():
    sc = generate_scenario(GenSpec(base_node_count=14, increment=3, instance_count=3, communities_M=3, seed=8))
    cfg = VnsConfig(population_size=6, evals_per_individual=60, seed=2)
    a = solve_svns(sc.graphs[0], cfg, backend=fast)
    b = solve_svns(sc.graphs[0], cfg, backend=slow)
    assert np.array_equal(a.trace, b.trace) and a.best.partition == b.best.partition
    ca = solve_covns(sc.graphs, cfg, backend=fast)
    cb = solve_covns(sc.graphs, cfg, backend=slow)
    for x, y in zip(ca.tasks, cb.tasks):
        assert np.array_equal(x.trace, y.trace)


def test_env_flag_selects_numpy():
    code = "from covns import kernels, _accel; print(kernels.active.name, _accel.DISABLED_BY_ENV)"
    env = {**os.environ, "COVNS_DISABLE_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
    env["COVNS_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    expected = "numba" if fast is not None else "numpy"
    assert out.stdout.split() == [expected, "False"]


def test_backend_lookup():
    assert kernels.backend("numpy") is slow
    with pytest.raises(ValueError):
        kernels.backend("cuda")
