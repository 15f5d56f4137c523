"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times three hot paths on each available backend and checks that both
produce identical results:

* labeling enumeration for the Hamming 4-cube (990 Lipschitz vertices),
* the minimax objective for the (3,3) model under the L1 metric,
* double-description adjacency for (3,3) under the L0 metric.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wim import kernels
from wim.model import ModelSpec, sample_simplex
from wim.optimize import Problem
from wim.polytope import lipschitz_vertices_bipartite, lipschitz_vertices_general
from wim.statespace import l0_metric, l1_metric


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--evals", type=int, default=20000)
    args = ap.parse_args(argv)

    cube = l0_metric([2, 2, 2, 2])
    grid = l0_metric([3, 3])
    problem = Problem(ModelSpec.of(3, 3), l1_metric([3, 3]), lattice=False)
    rng = np.random.default_rng(0)
    thetas = rng.random((args.evals, problem.model.param_dim))
    mu = sample_simplex(problem.model.n, 1, 0)[0]

    def minimax(backend):
        f = kernels.get_backend(backend).minimax_value
        return np.array([f(t, mu, problem.X, *problem.tables) for t in thetas])

    cases = [
        ("4-cube labelings", lambda b: lipschitz_vertices_bipartite(cube, backend=b).vertex_set()),
        (f"(3,3)/L1 minimax x{args.evals}", minimax),
        ("(3,3)/L0 double description", lambda b: lipschitz_vertices_general(grid, backend=b).vertex_set()),
    ]
    names = sorted(kernels.BACKENDS)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':34s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}  match")
    for label, fn in cases:
        times, outs = {}, {}
        for name in names:
            times[name], outs[name] = best_of(lambda: fn(name), args.repeat)
        ref = outs[names[0]]
        match = all(
            np.allclose(o, ref, rtol=0, atol=1e-12) if isinstance(o, np.ndarray) else o == ref
            for o in outs.values()
        )
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:34s}" + "".join(f"{times[n]:11.4f}s" for n in names)
              + f"{speed:9.1f}x  {'yes' if match else 'NO'}")


if __name__ == "__main__":
    main()
