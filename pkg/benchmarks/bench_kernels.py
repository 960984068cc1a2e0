"""Time the compiled and pure-Python kernels on the same inputs.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from randnn._backend import BACKEND, available_backends


def series_case(rng, T=5000, n=200):
    W_R = rng.uniform(-1, 1, (n, n))
    W_R *= 0.9 / np.abs(np.linalg.eigvals(W_R)).max()
    return (rng.uniform(-1, 1, (T, n)), W_R, np.zeros(n))


def tree_case(rng, n_nodes=5000, n=50):
    # random recursive tree laid out children-first: node k's parent has a larger index
    parent = np.array([rng.integers(k + 1, n_nodes) for k in range(n_nodes - 1)])
    kids = [[] for _ in range(n_nodes)]
    for child, p in enumerate(parent):
        kids[p].append(child)
    ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(k) for k in kids])
    idx = np.array([c for k in kids for c in k], dtype=np.int64)
    W_R = rng.uniform(-1, 1, (n, n)) * 0.02
    return (rng.uniform(-1, 1, (n_nodes, n)), W_R, ptr, idx)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    cases = {
        "series_states T=5000 N=200": ("series_states", series_case(rng)),
        "tree_states nodes=5000 N=50": ("tree_states", tree_case(rng)),
        "hessenberg_eigvals N=100": ("hessenberg_eigvals", (rng.standard_normal((100, 100)),)),
        "hessenberg_eigvals N=300": ("hessenberg_eigvals", (rng.standard_normal((300, 300)),)),
    }
    backends = available_backends()
    print(f"default backend: {BACKEND}")
    print(f"{'case':32s}" + "".join(f"{name:>12s}" for name in backends) + "     speedup")
    for label, (fn, inputs) in cases.items():
        times = {}
        for name, module in backends.items():
            call = getattr(module, fn)
            times[name] = min(timeit.repeat(lambda: call(*inputs), number=1, repeat=args.repeat))
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:32s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times.values()) + f"{speedup:11.1f}x")


if __name__ == "__main__":
    main()
