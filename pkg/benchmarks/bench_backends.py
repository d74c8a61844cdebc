"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--sizes 50 100 200] [--repeat 5]
"""

import argparse
import time

import numpy as np

from covns import kernels
from covns.benchgen import GenSpec, generate_base


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(size, repeat, backends):
    g, _ = generate_base(GenSpec(base_node_count=size, instance_count=1, seed=size), np.random.default_rng(size))
    rng = np.random.default_rng(0)
    pop = np.stack([rng.integers(1, 9, size) for _ in range(10)]).astype(np.int64)
    uniforms = rng.random((10, kernels.UNIFORMS_PER_MOVE))
    ops = np.arange(4, dtype=np.int64)
    rows = []
    for be in backends:
        b, total = g.modularity_matrix, g.total_weight
        be.modularity(b, total, pop[0])  # compile
        be.sweep(b, total, pop.copy(), np.full(10, -1.0), uniforms, ops, np.empty(10))

        def modularity_loop():
            for row in pop:
                be.modularity(b, total, row)

        def sweep_loop():
            for _ in range(20):
                be.sweep(b, total, pop.copy(), np.full(10, -1.0), uniforms, ops, np.empty(10))

        rows.append((be.name, best_of(modularity_loop, repeat) / 10, best_of(sweep_loop, repeat) / 200))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = [be for be in (kernels.numba_backend, kernels.numpy_backend) if be is not None]
    print(f"{'V':>5} {'backend':>8} {'modularity (us)':>16} {'move+eval (us)':>16}")
    for size in args.sizes:
        for name, t_mod, t_move in bench(size, args.repeat, backends):
            print(f"{size:>5} {name:>8} {t_mod * 1e6:>16.1f} {t_move * 1e6:>16.1f}")


if __name__ == "__main__":
    main()
