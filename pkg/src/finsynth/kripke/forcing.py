"""Kripke-Joyal forcing over a finite presheaf model.

Formulas are evaluated bottom-up as boolean arrays, one per stage, over the
elements of the context presheaf.  Implication and the universal quantifier
take the meet over every arrow into the stage; everything else is pointwise.
Each (subformula, context) pair is evaluated once per :class:`Evaluator`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import IllTyped
from ..fincat import (
    IDX,
    ExponentialPresheaf,
    NatTrans,
    Presheaf,
    ProductPresheaf,
    Subobject,
    exponential,
    omega,
    terminal,
)
from ..latdual import InternalLattice
from . import syntax as S
from .syntax import parse, show

# ---------------------------------------------------------------------------
# Interpretation of names
# ---------------------------------------------------------------------------


class Interpretation:
    """Types, functions and predicates available to formulas.

    ``J`` and ``I`` name the lattice carrier, ``Omega`` the subobject
    classifier.  Built-in functions are ``meet``, ``join``, ``0``, ``1``,
    ``ev``, ``fst``, ``snd``; built-in predicates ``IsT``, ``IsF`` and
    ``holds`` (truth of an element of ``Omega``).
    """

    def __init__(
        self,
        lattice: InternalLattice,
        types: dict[str, Presheaf] | None = None,
        functions: dict[str, NatTrans] | None = None,
        predicates: dict[str, Subobject] | None = None,
        type_constructors: dict[str, Callable[[Presheaf], Presheaf]] | None = None,
    ):
        self.lattice = lattice
        self.cat = lattice.cat
        J = lattice.carrier
        self.types: dict[str, Presheaf] = {"J": J, "I": J, "Omega": omega(self.cat), "1": terminal(self.cat)}
        self.types.update(types or {})
        self.functions: dict[str, NatTrans] = {
            "meet": lattice.meet,
            "join": lattice.join,
            "0": lattice.bottom,
            "1": lattice.top,
        }
        self.functions.update(functions or {})
        Om = omega(self.cat)
        self.predicates: dict[str, Subobject] = {
            "IsT": Subobject(J, [np.arange(n) == t for n, t in zip(J.sizes, lattice.tops)], validate=False),
            "IsF": Subobject(J, [np.arange(n) == b for n, b in zip(J.sizes, lattice.bottoms)], validate=False),
            "holds": Om.truth,
        }
        self.predicates.update(predicates or {})
        self.type_constructors = dict(type_constructors or {})
        self._type_cache: dict = {}
        self._products: dict = {}

    def with_types(self, **types: Presheaf) -> "Interpretation":
        other = Interpretation(self.lattice, {**self.types, **types}, self.functions, self.predicates, self.type_constructors)
        other._type_cache = {}
        return other

    def resolve(self, ty) -> Presheaf:
        if isinstance(ty, Presheaf):
            return ty
        cached = self._type_cache.get(ty)
        if cached is not None:
            return cached
        if isinstance(ty, S.TypeName):
            if ty.name not in self.types:
                raise IllTyped(f"unknown type {ty.name}")
            out = self.types[ty.name]
        elif isinstance(ty, S.TypeExp):
            out = exponential(self.resolve(ty.exponent), self.resolve(ty.base))
        elif isinstance(ty, S.TypeProd):
            out = self.product(self.resolve(ty.left), self.resolve(ty.right))
        elif isinstance(ty, S.TypeApp):
            ctor = self.type_constructors.get(ty.ctor)
            if ctor is None:
                raise IllTyped(f"unknown type constructor {ty.ctor}")
            out = ctor(self.resolve(ty.arg))
        else:
            raise IllTyped(f"not a type: {ty!r}")
        self._type_cache[ty] = out
        return out

    def product(self, *factors: Presheaf) -> ProductPresheaf:
        key = tuple(id(f) for f in factors)
        P = self._products.get(key)
        if P is None:
            P = self._products[key] = ProductPresheaf(list(factors))
            P._keep = factors  # keep ids alive for the cache key
        return P


def _same_type(A: Presheaf, B: Presheaf) -> bool:
    return A is B or A.same(B)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass
class Witness:
    """A stage and environment at which a clause is not forced."""

    stage: int
    stage_name: str
    env: dict
    clause: object
    context: tuple
    env_index: int

    def to_json(self) -> dict:
        return {
            "stage": self.stage_name,
            "env": {k: _jsonable(v) for k, v in self.env.items()},
            "clause": show(self.clause),
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class Verdict:
    truth: Subobject
    is_global: bool
    counterexample: tuple | None = None  # (stage, context element)
    witness: Witness | None = field(default=None)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class Evaluator:
    def __init__(self, interp: Interpretation):
        self.interp = interp
        self.cat = interp.cat
        self._cache: dict = {}
        self._ctx_cache: dict = {}

    # contexts are tuples of (name, Presheaf)
    def context(self, ctx: tuple) -> Presheaf:
        key = tuple((n, id(T)) for n, T in ctx)
        P = self._ctx_cache.get(key)
        if P is None:
            P = terminal(self.cat) if not ctx else self.interp.product(*[T for _, T in ctx])
            self._ctx_cache[key] = P
        return P

    def _coord(self, ctx: tuple, k: int) -> list[np.ndarray]:
        P = self.context(ctx)
        if isinstance(P, ProductPresheaf):
            return [P.coordinates(c)[k] for c in self.cat.objects]
        raise IllTyped("variable lookup in the empty context")

    # -- terms -------------------------------------------------------------
    def term(self, t, ctx: tuple) -> tuple[Presheaf, list[np.ndarray]]:
        key = ("t", t, tuple((n, id(T)) for n, T in ctx))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._term(t, ctx)
        self._cache[key] = out
        return out

    def _ctx_size(self, ctx: tuple) -> np.ndarray:
        return self.context(ctx).sizes

    def _term(self, t, ctx):
        sizes = self._ctx_size(ctx)
        if isinstance(t, S.Name):
            for k in range(len(ctx) - 1, -1, -1):
                if ctx[k][0] == t.name:
                    return ctx[k][1], self._coord(ctx, k)
            return self._apply(t.name, (), ctx, sizes)
        if isinstance(t, S.App):
            return self._apply(t.fn, t.args, ctx, sizes)
        if isinstance(t, S.Pair):
            A, a = self.term(t.left, ctx)
            B, b = self.term(t.right, ctx)
            P = self.interp.product(A, B)
            vals = [a[c] * B.sizes[c] + b[c] for c in self.cat.objects]
            return P, vals
        raise IllTyped(f"not a term: {t!r}")

    def _args(self, args, ctx):
        return [self.term(a, ctx) for a in args]

    def _index_into(self, source: Presheaf, evald, what: str) -> list[np.ndarray]:
        """Flattened index into ``source`` of the evaluated argument tuple."""
        types = [T for T, _ in evald]
        if len(evald) == 0:
            if not np.all(source.sizes == 1):
                raise IllTyped(f"{what} expects arguments")
            n = self._current_sizes
            return [np.zeros(n[c], IDX) for c in self.cat.objects]
        if len(evald) == 1:
            if not _same_type(types[0], source):
                raise IllTyped(f"{what}: argument type does not match")
            return evald[0][1]
        if not isinstance(source, ProductPresheaf) or len(source.factors) != len(evald):
            raise IllTyped(f"{what} takes {1 if not isinstance(source, ProductPresheaf) else len(source.factors)} arguments")
        for F, T in zip(source.factors, types):
            if not _same_type(F, T):
                raise IllTyped(f"{what}: argument type does not match")
        out = []
        for c in self.cat.objects:
            idx = np.zeros_like(evald[0][1][c])
            for F, (_, v) in zip(source.factors, evald):
                idx = idx * F.sizes[c] + v[c]
            out.append(idx)
        return out

    def _apply(self, fn: str, args, ctx, sizes):
        evald = self._args(args, ctx)
        self._current_sizes = sizes
        if fn == "ev":
            if len(evald) != 2 or not isinstance(evald[0][0], ExponentialPresheaf):
                raise IllTyped("ev expects a function and an argument")
            E = evald[0][0]
            nat = E.ev
        elif fn in ("fst", "snd") and fn not in self.interp.functions:
            if len(evald) != 1 or not isinstance(evald[0][0], ProductPresheaf) or len(evald[0][0].factors) != 2:
                raise IllTyped(f"{fn} expects a pair")
            P = evald[0][0]
            nat = P.projections[0 if fn == "fst" else 1]
            return nat.target, [nat.comps[c][evald[0][1][c]] for c in self.cat.objects]
        else:
            nat = self.interp.functions.get(fn)
            if nat is None:
                raise IllTyped(f"unknown name {fn}")
        idx = self._index_into(nat.source, evald, fn)
        return nat.target, [nat.comps[c][idx[c]] for c in self.cat.objects]

    # -- formulas ----------------------------------------------------------
    def formula(self, f, ctx: tuple) -> list[np.ndarray]:
        key = ("f", f, tuple((n, id(T)) for n, T in ctx))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._formula(f, ctx)
        self._cache[key] = out
        return out

    def _box(self, ctx: tuple, vals: list[np.ndarray]) -> list[np.ndarray]:
        """``alpha`` is kept iff ``vals`` holds at every restriction of ``alpha``."""
        P = self.context(ctx)
        cat = self.cat
        out = []
        for c in cat.objects:
            acc = np.ones(P.sizes[c], dtype=bool)
            for g in cat.into(c):
                d = cat.src[g]
                if d == c and g == cat.identity[c]:
                    acc &= vals[c]
                else:
                    acc &= vals[d][P.act[g]]
            out.append(acc)
        return out

    def _formula(self, f, ctx):
        sizes = self._ctx_size(ctx)
        objs = self.cat.objects
        if isinstance(f, S.Top):
            return [np.ones(sizes[c], bool) for c in objs]
        if isinstance(f, S.Bot):
            return [np.zeros(sizes[c], bool) for c in objs]
        if isinstance(f, S.Eq):
            A, a = self.term(f.left, ctx)
            B, b = self.term(f.right, ctx)
            if not _same_type(A, B):
                raise IllTyped(f"equation between different types: {show(f)}")
            return [a[c] == b[c] for c in objs]
        if isinstance(f, S.Mem):
            sub = self.interp.predicates.get(f.pred)
            if sub is None:
                raise IllTyped(f"unknown predicate {f.pred}")
            evald = self._args(f.args, ctx)
            self._current_sizes = sizes
            idx = self._index_into(sub.ambient, evald, f.pred)
            return [sub.masks[c][idx[c]] for c in objs]
        if isinstance(f, S.And):
            a, b = self.formula(f.left, ctx), self.formula(f.right, ctx)
            return [x & y for x, y in zip(a, b)]
        if isinstance(f, S.Or):
            a, b = self.formula(f.left, ctx), self.formula(f.right, ctx)
            return [x | y for x, y in zip(a, b)]
        if isinstance(f, S.Implies):
            a, b = self.formula(f.left, ctx), self.formula(f.right, ctx)
            return self._box(ctx, [~x | y for x, y in zip(a, b)])
        if isinstance(f, S.Not):
            a = self.formula(f.body, ctx)
            return self._box(ctx, [~x for x in a])
        if isinstance(f, S.Iff):
            a, b = self.formula(f.left, ctx), self.formula(f.right, ctx)
            return self._box(ctx, [x == y for x, y in zip(a, b)])
        if isinstance(f, (S.Forall, S.Exists)):
            T = self.interp.resolve(f.type)
            inner = ctx + ((f.var, T),)
            body = self.formula(f.body, inner)
            red = []
            for c in objs:
                m = body[c].reshape(sizes[c], T.sizes[c])
                red.append(m.all(axis=1) if isinstance(f, S.Forall) else m.any(axis=1))
            return self._box(ctx, red) if isinstance(f, S.Forall) else red
        raise IllTyped(f"not a formula: {f!r}")

    # -- witnesses ---------------------------------------------------------
    def env(self, ctx: tuple, c: int, k: int) -> dict:
        P = self.context(ctx)
        if not ctx:
            return {}
        coords = P.split(c, k)
        return {name: T.label(c, x) for (name, T), x in zip(ctx, coords)}

    def _least_failure(self, ctx: tuple, c: int, alpha: int, bad: Callable[[int, np.ndarray], np.ndarray]):
        """Least ``(d, index)`` with ``d`` reached from ``c`` along which ``bad`` holds."""
        P = self.context(ctx)
        best = None
        for g in self.cat.into(c):
            d = int(self.cat.src[g])
            a = int(P.act[g][alpha])
            hits = bad(d, a)
            if hits is not None and len(hits):
                cand = (d, a, int(hits[0]))
                if best is None or cand < best:
                    best = cand
        return best

    def descend(self, f, ctx: tuple, c: int, alpha: int) -> tuple:
        """Follow a failing formula down to the clause that fails; returns (clause, ctx, stage, index)."""
        if isinstance(f, S.And):
            left = self.formula(f.left, ctx)
            if not left[c][alpha]:
                return self.descend(f.left, ctx, c, alpha)
            return self.descend(f.right, ctx, c, alpha)
        if isinstance(f, S.Forall):
            T = self.interp.resolve(f.type)
            inner = ctx + ((f.var, T),)
            body = self.formula(f.body, inner)

            def bad(d, a):
                n = T.sizes[d]
                return np.flatnonzero(~body[d][a * n : (a + 1) * n])

            d, a, x = self._least_failure(ctx, c, alpha, bad)
            return self.descend(f.body, inner, d, a * T.sizes[d] + x)
        if isinstance(f, S.Implies):
            left, right = self.formula(f.left, ctx), self.formula(f.right, ctx)

            def bad(d, a):
                return np.array([0]) if left[d][a] and not right[d][a] else None

            d, a, _ = self._least_failure(ctx, c, alpha, bad)
            return self.descend(f.right, ctx, d, a)
        return f, ctx, c, alpha


def force(interp: Interpretation, ctx: tuple | list, phi, evaluator: Evaluator | None = None) -> Verdict:
    """Truth subobject of ``phi`` over the context ``ctx`` of ``(name, type)`` pairs."""
    if isinstance(phi, str):
        phi = parse(phi)
    ev = evaluator or Evaluator(interp)
    ctx = tuple((n, interp.resolve(T)) for n, T in ctx)
    vals = ev.formula(phi, ctx)
    P = ev.context(ctx)
    truth = Subobject(P, vals)
    counter = None
    for c in interp.cat.objects:
        miss = np.flatnonzero(~vals[c])
        if len(miss):
            counter = (c, int(miss[0]))
            break
    witness = None
    if counter is not None:
        clause, wctx, d, k = ev.descend(phi, ctx, *counter)
        witness = Witness(d, interp.cat.obj_names[d], ev.env(wctx, d, k), clause, wctx, k)
    return Verdict(truth, counter is None, counter, witness)


def holds_globally(interp: Interpretation, phi) -> tuple[bool, Witness | None]:
    v = force(interp, (), phi)
    return v.is_global, v.witness


def verify_witness(interp: Interpretation, w: Witness) -> bool:
    """Re-evaluate the failing clause from scratch; true when it is indeed not forced."""
    ev = Evaluator(interp)
    vals = ev.formula(w.clause, w.context)
    return not bool(vals[w.stage][w.env_index])
