"""Compare the compiled kernels with the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from nisqmap import _kernels
from nisqmap.device import topology


def cases():
    model = topology("grid2d:10x5")
    indptr, indices = model.csr
    allowed = np.ones(model.n_qubits, dtype=np.uint8)
    yield "bfs_all_pairs (50 qubits)", "bfs_all_pairs", (indptr, indices, allowed, model.sentinel)

    region = topology("grid2d:4x2").distances.astype(np.int32)
    pa = np.array([0, 0, 1, 2, 3, 4, 5], dtype=np.int32)
    pb = np.array([1, 2, 3, 4, 5, 6, 6], dtype=np.int32)
    yield "min_placement_cost (7 of 8)", "min_placement_cost", (region, pa, pb, 7)

    rng = np.random.default_rng(0)
    d = np.ascontiguousarray(model.distances[None, :, :], dtype=np.int32)
    ng, nc = 40, 60
    p1 = rng.integers(0, 50, ng).astype(np.int32)
    p2 = rng.integers(0, 50, ng).astype(np.int32)
    w = rng.random(ng)
    edges = np.array(model.edges[:nc], dtype=np.int32)
    yield "h_costs (60 swaps x 40 gates)", "h_costs", (
        d, np.zeros(ng, dtype=np.int32), p1, p2, w,
        np.ascontiguousarray(edges[:, 0]), np.ascontiguousarray(edges[:, 1]))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    compiled = _kernels.compiled()
    if compiled is None:
        print("compiled kernels are not built; only the fallback is available")
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, call_args in cases():
        py = getattr(_kernels.py, name)
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{label:34s} {t_py:10.3f} {'-':>10s} {'-':>8s}")
            continue
        cy = getattr(compiled, name)
        assert np.allclose(np.asarray(py(*call_args)), np.asarray(cy(*call_args)))
        t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:34s} {t_py:10.3f} {t_cy:10.3f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
