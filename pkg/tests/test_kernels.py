import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsynth import fincat as fc
from finsynth import kernels
from finsynth.latdual import FinDistLattice, congruence, free_algebra

from .helpers import arrow_presheaves

pairs = st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40),
    )
)


@settings(max_examples=200, deadline=None)
@given(pairs)
def test_union_find_backends_agree(case):
    n, edges = case
    a = np.array([e[0] for e in edges], dtype=np.int64)
    b = np.array([e[1] for e in edges], dtype=np.int64)
    nb = kernels.union_find_nb(n, a, b)
    assert np.array_equal(nb, kernels.union_find_np(n, a, b))
    # labels are numbered by least member
    seen = []
    for x in nb:
        if x not in seen:
            seen.append(int(x))
    assert seen == list(range(len(seen)))
    for x, y in edges:
        assert nb[x] == nb[y]


LATTICES = [FinDistLattice.chain(2), FinDistLattice.chain(3), FinDistLattice.diamond(), free_algebra(FinDistLattice.chain(2), 2).lattice]


@pytest.mark.parametrize("L", LATTICES, ids=["2", "3", "diamond", "free2"])
def test_lattice_scan_accepts_lattices(L):
    assert tuple(kernels.lattice_scan_nb(L.meet, L.join, L.bottom, L.top))[0] == 0
    assert tuple(kernels.lattice_scan_np(L.meet, L.join, L.bottom, L.top))[0] == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.sampled_from(["meet", "join"]))
def test_lattice_scan_backends_agree_on_corruptions(a, b, v, which):
    L = FinDistLattice.diamond()
    meet, join = L.meet.copy(), L.join.copy()
    (meet if which == "meet" else join)[a, b] = v
    nb = tuple(int(x) for x in kernels.lattice_scan_nb(meet, join, L.bottom, L.top))
    np_ = tuple(int(x) for x in kernels.lattice_scan_np(meet, join, L.bottom, L.top))
    assert nb == np_


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=3))
def test_congruence_closure_backends_agree(seed_pairs):
    A = free_algebra(FinDistLattice.chain(2), 2)
    n = A.n
    seed_pairs = [(a % n, b % n) for a, b in seed_pairs]
    a = np.array([p[0] for p in seed_pairs], dtype=np.int64)
    b = np.array([p[1] for p in seed_pairs], dtype=np.int64)
    lab = kernels.union_find_np(n, a, b)
    first = np.array([int(np.flatnonzero(lab == lab[i])[0]) for i in range(n)], dtype=np.int64)
    nb = kernels.congruence_closure_nb(A.lattice.meet, A.lattice.join, first)
    np_ = kernels.congruence_closure_np(A.lattice.meet, A.lattice.join, first)
    assert np.array_equal(nb, np_)
    assert np.array_equal(np.asarray(nb), congruence(A, seed_pairs))


@settings(max_examples=60, deadline=None)
@given(arrow_presheaves(), arrow_presheaves())
def test_hom_search_backends_agree(X, Y):
    saved = kernels.enumerate_assignments
    try:
        kernels.enumerate_assignments = kernels.enumerate_assignments_nb
        fast = fc.homs(X, Y)
        kernels.enumerate_assignments = kernels.enumerate_assignments_np
        slow = fc.homs(X, Y)
    finally:
        kernels.enumerate_assignments = saved
    assert np.array_equal(fast, slow)


def test_environment_flag_selects_fallback():
    env = {**os.environ, "FINSYNTH_DISABLE_NUMBA": "1"}
    code = "from finsynth import kernels; print(kernels.backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_fallback_reports_match_compiled(tmp_path):
    base = [sys.executable, "-m", "finsynth.cli", "set-2chain", "arrow-3-2", "--checks", "conditions,geometry"]
    outs = []
    for flag in ("0", "1"):
        env = {**os.environ, "FINSYNTH_DISABLE_NUMBA": flag}
        outs.append(subprocess.run(base, env=env, capture_output=True, check=True).stdout)
    assert outs[0] == outs[1]


def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--repeat", "1"], capture_output=True, text=True, check=True)
    assert out.stdout.count("x\n") == 4
