"""Time each hot kernel with numba and with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both variants are called on identical inputs and their outputs compared
before timing.  The first numba call (compilation) is excluded.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from finsynth import fincat as fc
from finsynth import kernels
from finsynth.latdual import FinDistLattice, free_algebra, opens_algebra


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _hom_search(variant):
    def go(X, Y):
        saved = kernels.enumerate_assignments
        kernels.enumerate_assignments = variant
        try:
            return fc.homs(X, Y)
        finally:
            kernels.enumerate_assignments = saved

    return go


def cases():
    rng = np.random.default_rng(0)
    n = 20000
    a, b = rng.integers(0, n, 15000), rng.integers(0, n, 15000)
    yield "union_find (n=20000)", kernels.union_find_nb, kernels.union_find_np, (n, a, b)

    L = opens_algebra(4, FinDistLattice.chain(3)).lattice
    yield f"lattice_scan ({L.n} elements)", kernels.lattice_scan_nb, kernels.lattice_scan_np, (L.meet, L.join, L.bottom, L.top)

    A = free_algebra(FinDistLattice.chain(3), 3)
    seed = np.arange(A.n, dtype=np.int64)
    seed[A.gen(0)] = seed[A.gen(1)] = min(A.gen(0), A.gen(1))
    yield f"congruence_closure ({A.n} elements)", kernels.congruence_closure_nb, kernels.congruence_closure_np, (A.lattice.meet, A.lattice.join, seed)

    cat = fc.FinCategory.arrow()
    X = fc.Presheaf(cat, [3, 4], [np.arange(3), np.arange(4), np.array([0, 1, 2, 2])])
    Y = fc.Presheaf(cat, [4, 5], [np.arange(4), np.arange(5), np.array([0, 1, 2, 3, 3])])
    yield "hom search (arrow, 3+4 -> 4+5)", _hom_search(kernels.enumerate_assignments_nb), _hom_search(kernels.enumerate_assignments_np), (X, Y)


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    return np.array_equal(np.asarray(x), np.asarray(y))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':40s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fast, slow, inputs in cases():
        out_fast = fast(*inputs)  # compiles
        out_slow = slow(*inputs)
        if not _same(out_fast, out_slow):
            raise SystemExit(f"{name}: backends disagree")
        t_fast = _best(lambda: fast(*inputs), args.repeat)
        t_slow = _best(lambda: slow(*inputs), args.repeat)
        print(f"{name:40s} {t_fast * 1e3:10.3f} {t_slow * 1e3:10.3f} {t_slow / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
