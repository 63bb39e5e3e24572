"""Brute-force reference computations.

These deliberately avoid the search kernel: natural transformations are
found by joining per-stage function tables and filtering with numpy, which
gives an independent check of everything built on ``fincat.homs``.
"""
from __future__ import annotations

import numpy as np

from . import fincat as fc
from .budget import check as budget_check
from .fincat import IDX, NatTrans, Presheaf


def stage_functions(n_dom: int, n_cod: int) -> np.ndarray:
    """Every function ``n_dom -> n_cod`` as rows, lexicographic."""
    budget_check(n_cod**n_dom, "stage function table")
    if n_dom == 0:
        return np.zeros((1, 0), dtype=IDX)
    if n_cod == 0:
        return np.zeros((0, n_dom), dtype=IDX)
    return np.indices((n_cod,) * n_dom).reshape(n_dom, -1).T.astype(IDX)


def brute_homs(X: Presheaf, Y: Presheaf) -> np.ndarray:
    """Natural transformations ``X -> Y`` as stage-major rows, sorted."""
    cat = X.cat
    table = np.zeros((1, 0), dtype=IDX)
    cols: dict[int, slice] = {}
    for c in cat.objects:
        fresh = stage_functions(int(X.sizes[c]), int(Y.sizes[c]))
        budget_check(len(table) * len(fresh), "stage join")
        left = np.repeat(table, len(fresh), axis=0)
        right = np.tile(fresh, (len(table), 1))
        cols[c] = slice(table.shape[1], table.shape[1] + fresh.shape[1])
        table = np.concatenate([left, right], axis=1)
        keep = np.ones(len(table), dtype=bool)
        for f in cat.morphisms:
            s, t = int(cat.src[f]), int(cat.tgt[f])
            if c not in (s, t) or s not in cols or t not in cols or not X.sizes[t]:
                continue
            # value(s, x.f) == value(t, x).f
            lhs = table[:, cols[s]][:, X.act[f]]
            rhs = Y.act[f][table[:, cols[t]]]
            keep &= (lhs == rhs).all(axis=1)
        table = table[keep]
    order = np.concatenate([np.arange(cols[c].start, cols[c].stop) for c in cat.objects] + [np.zeros(0, IDX)]).astype(IDX)
    out = table[:, order]
    if out.shape[1] and len(out) > 1:
        out = out[np.lexsort(out.T[::-1])]
    return out


def _restriction_columns(f: NatTrans, DA: fc.ProductPresheaf, DB: fc.ProductPresheaf) -> np.ndarray:
    """Column of ``(g, f a)`` in ``DB`` for each element ``(g, a)`` of ``DA``."""
    cat = f.cat
    cols = []
    for d in cat.objects:
        for k in range(DA.sizes[d]):
            g, a = DA.split(d, k)
            cols.append(DB.offsets[d] + DB.pair(d, g, int(f.comps[d][a])))
    return np.array(cols, dtype=IDX)


def unique_lifts(C: Presheaf, f: NatTrans) -> bool:
    """Every map ``y(c) x A -> C`` extends uniquely along ``y(c) x f``, at every stage."""
    A, B = f.source, f.target
    cat = f.cat
    for c in cat.objects:
        yc = fc.representable(cat, c)
        DA, DB = fc.product(yc, A), fc.product(yc, B)
        rows_b = brute_homs(DB, C)
        rows_a = brute_homs(DA, C)
        sel = _restriction_columns(f, DA, DB)
        restricted = rows_b[:, sel] if len(rows_b) else np.zeros((0, len(sel)), IDX)
        uniq, counts = np.unique(restricted, axis=0, return_counts=True) if len(restricted) else (restricted, np.zeros(0, IDX))
        if len(uniq) != len(rows_a) or np.any(counts != 1):
            return False
        if len(rows_a) and not np.array_equal(uniq, np.unique(rows_a, axis=0)):
            return False
    return True


def unique_preimage(source_rows: np.ndarray, restricted: np.ndarray, target_row: np.ndarray) -> np.ndarray:
    """Rows of ``source_rows`` whose restriction equals ``target_row``."""
    hit = (restricted == target_row[None, :]).all(axis=1) if len(restricted) else np.zeros(0, bool)
    return source_rows[hit]


def count_global_points(X: Presheaf) -> int:
    return len(brute_homs(fc.terminal(X.cat), X))
