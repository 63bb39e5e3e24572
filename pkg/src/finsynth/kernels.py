"""Hot inner loops.

Each kernel exists twice: a numba-compiled version and a fallback that
runs without numba.  The fallback is numpy-vectorised where the loop
structure allows it (union-find, axiom scans, congruence closure) and is
the same interpreted loop otherwise (backtracking hom search).

Set ``FINSYNTH_DISABLE_NUMBA=1`` to force the fallbacks.  Both variants are
importable as ``<name>_nb`` / ``<name>_np`` for benchmarking and for the
test that checks they agree.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLED = os.environ.get("FINSYNTH_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = numba is not None and not DISABLED


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Backtracking enumeration of natural transformations.
#
# Variables are the flattened elements of the source presheaf.  A check at
# position k compares the value of order[k] against an earlier variable
# through a restriction map of the target:
#   dir 0:  y == ymaps[off + val[other]]      (other restricts onto v)
#   dir 1:  ymaps[off + y] == val[other]      (v restricts onto other)
#   dir 2:  ymaps[off + y] == y               (endomorphism fixing v)
# ---------------------------------------------------------------------------


def _enumerate_assignments(order, dom_size, allowed, chk_ptr, chk_other, chk_dir, chk_off, ymaps, limit):
    n = order.shape[0]
    cap = 64
    out = np.empty((cap, n), dtype=np.int64)
    count = 0
    overflow = False
    val = np.full(n, -1, dtype=np.int64)
    nxt = np.zeros(n + 1, dtype=np.int64)
    k = 0
    while k >= 0:
        if k == n:
            if count >= limit:
                overflow = True
                break
            if count == cap:
                grown = np.empty((cap * 2, n), dtype=np.int64)
                grown[:cap] = out
                out = grown
                cap *= 2
            out[count] = val
            count += 1
            k -= 1
            continue
        v = order[k]
        y = nxt[k]
        found = False
        while y < dom_size[v]:
            if allowed[v, y]:
                ok = True
                for e in range(chk_ptr[k], chk_ptr[k + 1]):
                    d = chk_dir[e]
                    if d == 0:
                        if ymaps[chk_off[e] + val[chk_other[e]]] != y:
                            ok = False
                            break
                    elif d == 1:
                        if ymaps[chk_off[e] + y] != val[chk_other[e]]:
                            ok = False
                            break
                    else:
                        if ymaps[chk_off[e] + y] != y:
                            ok = False
                            break
                if ok:
                    found = True
                    break
            y += 1
        if found:
            val[v] = y
            nxt[k] = y + 1
            k += 1
            nxt[k] = 0
        else:
            val[v] = -1
            k -= 1
    return out[:count].copy(), overflow


enumerate_assignments_np = _enumerate_assignments
enumerate_assignments_nb = _njit(_enumerate_assignments)


# ---------------------------------------------------------------------------
# Union-find: canonical class labels, classes numbered by least member.
# ---------------------------------------------------------------------------


def _union_find_nb(n, a, b):
    parent = np.arange(n)
    for t in range(a.shape[0]):
        x = a[t]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        y = b[t]
        while parent[y] != y:
            parent[y] = parent[parent[y]]
            y = parent[y]
        if x != y:
            if x < y:
                parent[y] = x
            else:
                parent[x] = y
    root = np.empty(n, dtype=np.int64)
    for i in range(n):
        x = i
        while parent[x] != x:
            x = parent[x]
        root[i] = x
    label = np.full(n, -1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    nxt = 0
    for i in range(n):
        r = root[i]
        if label[r] < 0:
            label[r] = nxt
            nxt += 1
        out[i] = label[r]
    return out


def union_find_np(n, a, b):
    lab = np.arange(n, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size:
        while True:
            new = lab.copy()
            np.minimum.at(new, a, lab[b])
            np.minimum.at(new, b, lab[a])
            new = new[new]
            if np.array_equal(new, lab):
                break
            lab = new
    _, inv = np.unique(lab, return_inverse=True)
    return inv.astype(np.int64)


union_find_nb = _njit(_union_find_nb)


# ---------------------------------------------------------------------------
# Lattice axiom scan.  Returns (code, a, b, c); code 0 means all axioms hold.
# Axioms are tried in AXIOMS order and the lexicographically least witness
# of the first failing axiom is reported, identically in both variants.
# ---------------------------------------------------------------------------

AXIOMS = (
    "ok",
    "meet idempotent",
    "join idempotent",
    "meet commutative",
    "join commutative",
    "meet associative",
    "join associative",
    "absorption",
    "bounds",
    "distributivity",
)


def _lattice_scan_nb(meet, join, bottom, top):
    n = meet.shape[0]
    for a in range(n):
        if meet[a, a] != a:
            return 1, a, a, a
    for a in range(n):
        if join[a, a] != a:
            return 2, a, a, a
    for a in range(n):
        for b in range(n):
            if meet[a, b] != meet[b, a]:
                return 3, a, b, 0
    for a in range(n):
        for b in range(n):
            if join[a, b] != join[b, a]:
                return 4, a, b, 0
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if meet[meet[a, b], c] != meet[a, meet[b, c]]:
                    return 5, a, b, c
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if join[join[a, b], c] != join[a, join[b, c]]:
                    return 6, a, b, c
    for a in range(n):
        for b in range(n):
            if meet[a, join[a, b]] != a or join[a, meet[a, b]] != a:
                return 7, a, b, 0
    for a in range(n):
        if meet[bottom, a] != bottom or join[top, a] != top:
            return 8, a, 0, 0
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if meet[a, join[b, c]] != join[meet[a, b], meet[a, c]]:
                    return 9, a, b, c
    return 0, 0, 0, 0


def _first(mask):
    idx = np.argwhere(mask)
    return tuple(int(v) for v in idx[0]) if idx.size else None


def lattice_scan_np(meet, join, bottom, top):
    n = meet.shape[0]
    r = np.arange(n)
    A, B = np.meshgrid(r, r, indexing="ij")
    A3, B3, C3 = np.meshgrid(r, r, r, indexing="ij")
    checks = [
        (1, meet[r, r] != r, 1),
        (2, join[r, r] != r, 1),
        (3, meet != meet.T, 2),
        (4, join != join.T, 2),
        (5, meet[meet[A3, B3], C3] != meet[A3, meet[B3, C3]], 3),
        (6, join[join[A3, B3], C3] != join[A3, join[B3, C3]], 3),
        (7, (meet[A, join[A, B]] != A) | (join[A, meet[A, B]] != A), 2),
        (8, (meet[bottom, r] != bottom) | (join[top, r] != top), 1),
        (9, meet[A3, join[B3, C3]] != join[meet[A3, B3], meet[A3, C3]], 3),
    ]
    for code, bad, arity in checks:
        w = _first(bad)
        if w is not None:
            if arity == 1:
                return (code, w[0], w[0], w[0]) if code <= 2 else (code, w[0], 0, 0)
            if arity == 2:
                return code, w[0], w[1], 0
            return code, w[0], w[1], w[2]
    return 0, 0, 0, 0


lattice_scan_nb = _njit(_lattice_scan_nb)


# ---------------------------------------------------------------------------
# Congruence closure on a finite lattice: the least equivalence containing
# the seed classes that is compatible with meet and join.
# ---------------------------------------------------------------------------


def _congruence_closure_nb(meet, join, seed):
    n = meet.shape[0]
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        x = find(i)
        y = find(seed[i])
        if x != y:
            if x < y:
                parent[y] = x
            else:
                parent[x] = y
    changed = True
    while changed:
        changed = False
        for a in range(n):
            r = find(a)
            if r == a:
                continue
            for c in range(n):
                for t in range(2):
                    if t == 0:
                        x = find(meet[a, c])
                        y = find(meet[r, c])
                    else:
                        x = find(join[a, c])
                        y = find(join[r, c])
                    if x != y:
                        changed = True
                        if x < y:
                            parent[y] = x
                        else:
                            parent[x] = y
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = find(i)
    return out


def congruence_closure_np(meet, join, seed):
    n = meet.shape[0]
    r = np.arange(n)
    lab = union_find_np(n, r, np.asarray(seed, dtype=np.int64))
    while True:
        rep = np.zeros(n, dtype=np.int64)
        # least member of each class
        rep_of_class = np.full(lab.max() + 1, n, dtype=np.int64)
        np.minimum.at(rep_of_class, lab, r)
        rep = rep_of_class[lab]
        a = np.concatenate([r, meet.ravel(), join.ravel()])
        b = np.concatenate([rep, meet[rep].ravel(), join[rep].ravel()])
        new = union_find_np(n, a, b)
        if np.array_equal(new, lab):
            break
        lab = new
    rep_of_class = np.full(lab.max() + 1, n, dtype=np.int64)
    np.minimum.at(rep_of_class, lab, r)
    return rep_of_class[lab]


congruence_closure_nb = _njit(_congruence_closure_nb)


if USE_NUMBA:
    enumerate_assignments = enumerate_assignments_nb
    union_find = union_find_nb
    lattice_scan = lattice_scan_nb
    congruence_closure = congruence_closure_nb
else:
    enumerate_assignments = enumerate_assignments_np
    union_find = union_find_np
    lattice_scan = lattice_scan_np
    congruence_closure = congruence_closure_np


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
