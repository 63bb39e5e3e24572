"""Finite categories and presheaves on them.

Every stage of a presheaf is a dense range ``0..n-1``.  A morphism
``f: c -> d`` acts contravariantly, so ``P.act[f]`` is an integer array of
length ``P.sizes[d]`` with values in ``range(P.sizes[c])``.  Builders return
canonically ordered results, so isomorphic constructions done twice are
bit-identical.
"""
from __future__ import annotations

from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import kernels
from .budget import check as budget_check
from .budget import get_budget
from .errors import (
    AssocFailure,
    BaseMismatch,
    BudgetExceeded,
    FunctorLawFailure,
    IdentityFailure,
    NaturalityFailure,
    NonComposable,
    NotUniversal,
    RestrictionStabilityFailure,
    SourceMismatch,
    TargetMismatch,
)

IDX = np.int64


def _arr(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=IDX))


# ---------------------------------------------------------------------------
# Categories
# ---------------------------------------------------------------------------


class FinCategory:
    """A finite category given by a full composition table.

    ``comp[g, f]`` is ``g . f`` (``f`` first) or ``-1`` when the pair does not
    compose.  Identities are ``identity[c]``.
    """

    def __init__(
        self,
        n_objects: int,
        src: Sequence[int],
        tgt: Sequence[int],
        identity: Sequence[int],
        comp: np.ndarray,
        obj_names: Sequence[str] | None = None,
        mor_names: Sequence[str] | None = None,
        validate: bool = True,
    ):
        self.n_objects = int(n_objects)
        self.src = _arr(src)
        self.tgt = _arr(tgt)
        self.identity = _arr(identity)
        self.comp = _arr(comp).reshape(len(self.src), len(self.src))
        self.obj_names = list(obj_names) if obj_names is not None else [str(c) for c in range(self.n_objects)]
        self.mor_names = list(mor_names) if mor_names is not None else [f"f{m}" for m in range(len(self.src))]
        if validate:
            self.validate()

    @property
    def n_morphisms(self) -> int:
        return len(self.src)

    @property
    def objects(self) -> range:
        return range(self.n_objects)

    @property
    def morphisms(self) -> range:
        return range(self.n_morphisms)

    @cached_property
    def key(self) -> tuple:
        return (self.n_objects, self.src.tobytes(), self.tgt.tobytes(), self.identity.tobytes(), self.comp.tobytes())

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, FinCategory) and self.key == other.key)

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"FinCategory({self.n_objects} objects, {self.n_morphisms} morphisms)"

    @cached_property
    def _into(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.tgt == c) for c in self.objects]

    @cached_property
    def _out(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.src == c) for c in self.objects]

    def into(self, c: int) -> np.ndarray:
        """Morphisms with target ``c``, in index order."""
        return self._into[c]

    def out(self, c: int) -> np.ndarray:
        return self._out[c]

    @cached_property
    def _homs(self) -> dict[tuple[int, int], np.ndarray]:
        table: dict[tuple[int, int], np.ndarray] = {}
        for a in self.objects:
            for b in self.objects:
                table[a, b] = np.flatnonzero((self.src == a) & (self.tgt == b))
        return table

    def hom(self, a: int, b: int) -> np.ndarray:
        return self._homs[a, b]

    @cached_property
    def hom_position(self) -> np.ndarray:
        """Position of each morphism inside its hom-set."""
        pos = np.zeros(self.n_morphisms, dtype=IDX)
        for arr in self._homs.values():
            pos[arr] = np.arange(len(arr))
        return pos

    def compose(self, g: int, f: int) -> int:
        h = int(self.comp[g, f])
        if h < 0:
            raise NonComposable(f, g, "target of f differs from source of g")
        return h

    def is_identity(self, f: int) -> bool:
        return bool(self.identity[self.src[f]] == f)

    @cached_property
    def non_identities(self) -> np.ndarray:
        mask = np.ones(self.n_morphisms, dtype=bool)
        mask[self.identity] = False
        return np.flatnonzero(mask)

    def validate(self) -> "FinCategory":
        m = self.n_morphisms
        comp = self.comp
        composable = self.tgt[None, :] == self.src[:, None]  # [g, f]
        defined = comp >= 0
        bad = np.argwhere(composable != defined)
        if bad.size:
            g, f = (int(v) for v in bad[0])
            why = "composite missing" if composable[g, f] else "composite defined on a non-composable pair"
            raise NonComposable(f, g, why)
        gi, fi = np.nonzero(defined)
        h = comp[gi, fi]
        if h.size and (np.any(h >= m) or np.any(self.src[h] != self.src[fi]) or np.any(self.tgt[h] != self.tgt[gi])):
            k = int(np.flatnonzero((h >= m) | (self.src[np.minimum(h, m - 1)] != self.src[fi]) | (self.tgt[np.minimum(h, m - 1)] != self.tgt[gi]))[0])
            raise NonComposable(int(fi[k]), int(gi[k]), "composite has the wrong endpoints")
        for c in self.objects:
            i = int(self.identity[c])
            if self.src[i] != c or self.tgt[i] != c:
                raise IdentityFailure(c)
            left = comp[i, self.into(c)]
            right = comp[self.out(c), i]
            if np.any(left != self.into(c)) or np.any(right != self.out(c)):
                raise IdentityFailure(c)
        # associativity on every composable triple h.g.f
        for g in range(m):
            fs = self.into(self.src[g])
            hs = self.out(self.tgt[g])
            if not len(fs) or not len(hs):
                continue
            gf = comp[g, fs]
            hg = comp[hs, g]
            lhs = comp[hs[:, None], gf[None, :]]
            rhs = comp[hg[:, None], fs[None, :]]
            bad = np.argwhere(lhs != rhs)
            if bad.size:
                a, b = bad[0]
                raise AssocFailure(int(fs[b]), g, int(hs[a]))
        return self

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_spec(
        cls,
        objects: Sequence[str],
        morphisms: Sequence[tuple[str, int, int]],
        compose: Iterable[tuple[int, int, int]] = (),
        validate: bool = True,
    ) -> "FinCategory":
        """Build from non-identity generators and a composition list.

        Morphism ``k`` of ``morphisms`` gets index ``n_objects + k``; the
        identity of object ``c`` has index ``c``.  ``compose`` lists triples
        ``(g, f, h)`` meaning ``g . f = h`` with indices into ``morphisms``.
        """
        n = len(objects)
        m = n + len(morphisms)
        src = list(range(n)) + [s for _, s, _ in morphisms]
        tgt = list(range(n)) + [t for _, _, t in morphisms]
        names = [f"id_{o}" for o in objects] + [name for name, _, _ in morphisms]
        comp = np.full((m, m), -1, dtype=IDX)
        for f in range(m):
            comp[tgt[f], f] = f
            comp[f, src[f]] = f
        for g, f, h in compose:
            comp[n + g, n + f] = n + h
        return cls(n, src, tgt, list(range(n)), comp, list(objects), names, validate=validate)

    @classmethod
    def terminal(cls) -> "FinCategory":
        return cls.from_spec(["*"], [])

    @classmethod
    def discrete(cls, n: int) -> "FinCategory":
        return cls.from_spec([str(i) for i in range(n)], [])

    @classmethod
    def arrow(cls) -> "FinCategory":
        return cls.from_spec(["s", "t"], [("u", 0, 1)])

    @classmethod
    def indiscrete(cls, n: int) -> "FinCategory":
        """``n`` objects with exactly one morphism between any two."""
        objs = [str(i) for i in range(n)]
        mors = [(f"{a}>{b}", a, b) for a in range(n) for b in range(n) if a != b]
        idx = {(a, b): k for k, (_, a, b) in enumerate(mors)}
        comp = []
        for (a, b), f in idx.items():
            for (b2, c), g in idx.items():
                if b2 == b and c != a:
                    comp.append((g, f, idx[a, c]))
        cat = cls.from_spec(objs, mors, comp, validate=False)
        for (a, b), f in idx.items():
            g = idx[b, a]
            cat.comp[n + g, n + f] = a
        cat.validate()
        return cat

    @classmethod
    def poset(cls, n: int, leq: Callable[[int, int], bool]) -> "FinCategory":
        mors = [(f"{a}<{b}", a, b) for a in range(n) for b in range(n) if a != b and leq(a, b)]
        idx = {(a, b): k for k, (_, a, b) in enumerate(mors)}
        comp = [
            (idx[b, c], idx[a, b], idx[a, c])
            for (a, b) in idx
            for (b2, c) in idx
            if b2 == b and (a, c) in idx
        ]
        return cls.from_spec([str(i) for i in range(n)], mors, comp)

    def times(self, other: "FinCategory") -> "FinCategory":
        """Product category; morphism ``(f, g)`` has index ``f * m2 + g``."""
        m2 = other.n_morphisms
        n2 = other.n_objects
        src = (self.src[:, None] * n2 + other.src[None, :]).ravel()
        tgt = (self.tgt[:, None] * n2 + other.tgt[None, :]).ravel()
        ident = (self.identity[:, None] * m2 + other.identity[None, :]).ravel()
        c1 = self.comp[:, None, :, None]
        c2 = other.comp[None, :, None, :]
        comp = np.where((c1 >= 0) & (c2 >= 0), c1 * m2 + c2, -1).reshape(len(src), len(src))
        names = [f"({a},{b})" for a in self.obj_names for b in other.obj_names]
        mnames = [f"({a},{b})" for a in self.mor_names for b in other.mor_names]
        return FinCategory(self.n_objects * n2, src, tgt, ident, comp, names, mnames)


class FinFunctor:
    def __init__(self, source: FinCategory, target: FinCategory, obj_map: Sequence[int], mor_map: Sequence[int], validate: bool = True):
        self.source = source
        self.target = target
        self.obj = _arr(obj_map)
        self.mor = _arr(mor_map)
        if validate:
            self.validate()

    def validate(self) -> "FinFunctor":
        s, t = self.source, self.target
        if np.any(t.src[self.mor] != self.obj[s.src]) or np.any(t.tgt[self.mor] != self.obj[s.tgt]):
            raise FunctorLawFailure("morphism endpoints are not preserved")
        if np.any(self.mor[s.identity] != t.identity[self.obj]):
            raise FunctorLawFailure("identities are not preserved")
        gi, fi = np.nonzero(s.comp >= 0)
        if np.any(self.mor[s.comp[gi, fi]] != t.comp[self.mor[gi], self.mor[fi]]):
            raise FunctorLawFailure("composition is not preserved")
        return self

    @classmethod
    def first_projection(cls, prod: FinCategory, left: FinCategory, right: FinCategory) -> "FinFunctor":
        return cls(
            prod,
            left,
            np.repeat(np.arange(left.n_objects), right.n_objects),
            np.repeat(np.arange(left.n_morphisms), right.n_morphisms),
        )


# ---------------------------------------------------------------------------
# Presheaves, natural transformations, subobjects
# ---------------------------------------------------------------------------


class Presheaf:
    def __init__(
        self,
        cat: FinCategory,
        sizes: Sequence[int],
        act: Sequence[np.ndarray],
        labels: Sequence[Sequence[Hashable]] | None = None,
        validate: bool = True,
    ):
        self.cat = cat
        self.sizes = _arr(sizes)
        self.act = [_arr(a) for a in act]
        self.labels = [list(ls) for ls in labels] if labels is not None else None
        if validate:
            self.validate()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(sizes={self.sizes.tolist()})"

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(IDX)

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    def restrict(self, f: int, x: int) -> int:
        return int(self.act[f][x])

    def label(self, c: int, k: int) -> Hashable:
        return self.labels[c][k] if self.labels is not None else k

    @cached_property
    def _label_index(self) -> list[dict]:
        if self.labels is None:
            return [{k: k for k in range(int(n))} for n in self.sizes]
        return [{lab: k for k, lab in enumerate(ls)} for ls in self.labels]

    def index(self, c: int, label: Hashable) -> int:
        return self._label_index[c][label]

    def elements(self) -> Iterable[tuple[int, int]]:
        for c in self.cat.objects:
            for k in range(int(self.sizes[c])):
                yield c, k

    def same(self, other: "Presheaf") -> bool:
        return (
            self.cat == other.cat
            and np.array_equal(self.sizes, other.sizes)
            and all(np.array_equal(a, b) for a, b in zip(self.act, other.act))
        )

    def validate(self) -> "Presheaf":
        cat = self.cat
        if len(self.sizes) != cat.n_objects or len(self.act) != cat.n_morphisms:
            raise FunctorLawFailure("stage or action count does not match the base")
        for f in cat.morphisms:
            a = self.act[f]
            c, d = cat.src[f], cat.tgt[f]
            if a.shape != (self.sizes[d],) or (a.size and (a.min() < 0 or a.max() >= self.sizes[c])):
                raise FunctorLawFailure(f"action of {cat.mor_names[f]} has the wrong shape or range")
        for c in cat.objects:
            if not np.array_equal(self.act[cat.identity[c]], np.arange(self.sizes[c])):
                raise FunctorLawFailure(f"identity at {cat.obj_names[c]} does not act trivially")
        gi, fi = np.nonzero(cat.comp >= 0)
        for g, f in zip(gi, fi):
            h = cat.comp[g, f]
            # act(g.f) = act(f) . act(g)
            if not np.array_equal(self.act[h], self.act[f][self.act[g]]):
                raise FunctorLawFailure(f"act({cat.mor_names[h]}) != act({cat.mor_names[f]}) . act({cat.mor_names[g]})")
        return self

    def identity(self) -> "NatTrans":
        return NatTrans(self, self, [np.arange(n) for n in self.sizes], validate=False)


class NatTrans:
    def __init__(self, source: Presheaf, target: Presheaf, comps: Sequence[np.ndarray], validate: bool = True):
        if source.cat != target.cat:
            raise BaseMismatch("natural transformation between presheaves on different bases")
        self.source = source
        self.target = target
        self.comps = [_arr(a) for a in comps]
        if validate:
            self.validate()

    @property
    def cat(self) -> FinCategory:
        return self.source.cat

    def __call__(self, c: int, x: int) -> int:
        return int(self.comps[c][x])

    def __repr__(self) -> str:
        return f"NatTrans({self.source!r} -> {self.target!r})"

    def validate(self) -> "NatTrans":
        S, T = self.source, self.target
        for c in S.cat.objects:
            a = self.comps[c]
            if a.shape != (S.sizes[c],) or (a.size and (a.min() < 0 or a.max() >= T.sizes[c])):
                raise NaturalityFailure(None, f"component at {S.cat.obj_names[c]} has the wrong shape or range")
        for f in S.cat.non_identities:
            c, d = S.cat.src[f], S.cat.tgt[f]
            if not np.array_equal(T.act[f][self.comps[d]], self.comps[c][S.act[f]]):
                raise NaturalityFailure(int(f), f"square at {S.cat.mor_names[f]} does not commute")
        return self

    def then(self, other: "NatTrans") -> "NatTrans":
        """``other . self``."""
        if other.source is not self.target and not other.source.same(self.target):
            raise TargetMismatch("composite of non-matching natural transformations")
        return NatTrans(self.source, other.target, [b[a] for a, b in zip(self.comps, other.comps)], validate=False)

    def same(self, other: "NatTrans") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.comps, other.comps)) and len(self.comps) == len(other.comps)

    @classmethod
    def from_row(cls, source: Presheaf, target: Presheaf, row: np.ndarray) -> "NatTrans":
        o = source.offsets
        return cls(source, target, [row[o[c] : o[c + 1]] for c in source.cat.objects], validate=False)

    def row(self) -> np.ndarray:
        return np.concatenate(self.comps) if self.comps else np.zeros(0, IDX)

    @classmethod
    def from_function(cls, source: Presheaf, target: Presheaf, fn: Callable[[int, int], int]) -> "NatTrans":
        comps = [[fn(c, x) for x in range(int(source.sizes[c]))] for c in source.cat.objects]
        return cls(source, target, comps)


def compose(g: NatTrans, f: NatTrans) -> NatTrans:
    return f.then(g)


class Subobject:
    def __init__(self, ambient: Presheaf, masks: Sequence[np.ndarray], validate: bool = True):
        self.ambient = ambient
        self.masks = [np.asarray(m, dtype=bool) for m in masks]
        if validate:
            self.validate()

    def __repr__(self) -> str:
        return f"Subobject(sizes={self.sizes.tolist()} of {self.ambient.sizes.tolist()})"

    @property
    def sizes(self) -> np.ndarray:
        return np.array([int(m.sum()) for m in self.masks], dtype=IDX)

    def contains(self, c: int, x: int) -> bool:
        return bool(self.masks[c][x])

    def validate(self) -> "Subobject":
        X = self.ambient
        for f in X.cat.non_identities:
            c, d = X.cat.src[f], X.cat.tgt[f]
            inside = X.act[f][self.masks[d]]
            if not np.all(self.masks[c][inside]):
                x = int(np.flatnonzero(self.masks[d])[np.flatnonzero(~self.masks[c][inside])[0]])
                raise RestrictionStabilityFailure(f"element {x} at {X.cat.obj_names[d]} leaves the subobject along {X.cat.mor_names[f]}")
        return self

    def is_full(self) -> bool:
        return all(m.all() for m in self.masks)

    def same(self, other: "Subobject") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.masks, other.masks))

    def __and__(self, other: "Subobject") -> "Subobject":
        return Subobject(self.ambient, [a & b for a, b in zip(self.masks, other.masks)], validate=False)

    def __or__(self, other: "Subobject") -> "Subobject":
        return Subobject(self.ambient, [a | b for a, b in zip(self.masks, other.masks)], validate=False)

    @classmethod
    def full(cls, X: Presheaf) -> "Subobject":
        return cls(X, [np.ones(n, bool) for n in X.sizes], validate=False)

    @classmethod
    def empty(cls, X: Presheaf) -> "Subobject":
        return cls(X, [np.zeros(n, bool) for n in X.sizes], validate=False)

    @cached_property
    def _carrier(self) -> tuple[Presheaf, NatTrans]:
        X = self.ambient
        members = [np.flatnonzero(m) for m in self.masks]
        renumber = []
        for c, mem in enumerate(members):
            r = np.full(X.sizes[c], -1, dtype=IDX)
            r[mem] = np.arange(len(mem))
            renumber.append(r)
        act = [renumber[X.cat.src[f]][X.act[f][members[X.cat.tgt[f]]]] for f in X.cat.morphisms]
        labels = [[X.label(c, int(k)) for k in mem] for c, mem in enumerate(members)]
        P = Presheaf(X.cat, [len(m) for m in members], act, labels)
        return P, NatTrans(P, X, members, validate=False)

    def presheaf(self) -> Presheaf:
        return self._carrier[0]

    @property
    def inclusion(self) -> NatTrans:
        return self._carrier[1]


# ---------------------------------------------------------------------------
# Basic objects
# ---------------------------------------------------------------------------


def terminal(cat: FinCategory) -> Presheaf:
    return Presheaf(cat, [1] * cat.n_objects, [np.zeros(1, IDX) for _ in cat.morphisms], [["*"]] * cat.n_objects)


def empty(cat: FinCategory) -> Presheaf:
    return Presheaf(cat, [0] * cat.n_objects, [np.zeros(0, IDX) for _ in cat.morphisms])


def constant(cat: FinCategory, n: int, labels: Sequence[Hashable] | None = None) -> Presheaf:
    labs = [list(labels) if labels is not None else list(range(n))] * cat.n_objects
    return Presheaf(cat, [n] * cat.n_objects, [np.arange(n) for _ in cat.morphisms], labs)


def to_terminal(X: Presheaf, one: Presheaf | None = None) -> NatTrans:
    one = one or terminal(X.cat)
    return NatTrans(X, one, [np.zeros(n, IDX) for n in X.sizes], validate=False)


def from_empty(X: Presheaf, zero: Presheaf | None = None) -> NatTrans:
    zero = zero or empty(X.cat)
    return NatTrans(zero, X, [np.zeros(0, IDX) for _ in X.sizes], validate=False)


def representable(cat: FinCategory, c: int) -> Presheaf:
    """``y(c)``; stage ``d`` lists ``hom(d, c)`` in index order."""
    homs = [cat.hom(d, c) for d in cat.objects]
    pos = cat.hom_position
    act = []
    for f in cat.morphisms:
        d = cat.tgt[f]
        act.append(pos[cat.comp[homs[d], f]] if len(homs[d]) else np.zeros(0, IDX))
    labels = [[cat.mor_names[g] for g in hs] for hs in homs]
    return Presheaf(cat, [len(h) for h in homs], act, labels)


def global_point(X: Presheaf, values: Sequence[int]) -> NatTrans:
    return NatTrans(terminal(X.cat), X, [[v] for v in values])


def global_points(X: Presheaf) -> np.ndarray:
    """Rows of stage values, one per natural point ``1 -> X``."""
    return homs(terminal(X.cat), X)


# ---------------------------------------------------------------------------
# Products and coproducts
# ---------------------------------------------------------------------------


class ProductPresheaf(Presheaf):
    """Cartesian product; the first factor is the most significant digit."""

    def __init__(self, factors: Sequence[Presheaf]):
        if not factors:
            raise ValueError("use terminal() for the empty product")
        cat = factors[0].cat
        for F in factors[1:]:
            if F.cat != cat:
                raise BaseMismatch("product of presheaves on different bases")
        shape = np.array([F.sizes for F in factors], dtype=IDX)  # [k, n_objects]
        sizes = shape.prod(axis=0)
        budget_check(int(sizes.sum()), "product")
        self.factors = list(factors)
        self.shape = shape
        act = []
        for f in cat.morphisms:
            c, d = cat.src[f], cat.tgt[f]
            grids = np.meshgrid(*[F.act[f] for F in factors], indexing="ij")
            act.append(np.ravel_multi_index(tuple(grids), tuple(shape[:, c])).ravel() if sizes[d] else np.zeros(0, IDX))
        super().__init__(cat, sizes, act)

    def pair(self, c: int, *xs: int) -> int:
        return int(np.ravel_multi_index(tuple(xs), tuple(self.shape[:, c])))

    def split(self, c: int, k: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(k, tuple(self.shape[:, c])))

    def label(self, c: int, k: int) -> Hashable:
        return tuple(F.label(c, x) for F, x in zip(self.factors, self.split(c, k)))

    def coordinates(self, c: int) -> tuple[np.ndarray, ...]:
        """Arrays giving each factor's coordinate of every element at ``c``."""
        if not self.sizes[c]:
            return tuple(np.zeros(0, IDX) for _ in self.factors)
        return tuple(a.astype(IDX) for a in np.unravel_index(np.arange(self.sizes[c]), tuple(self.shape[:, c])))

    @cached_property
    def projections(self) -> list[NatTrans]:
        out = []
        for i, F in enumerate(self.factors):
            out.append(NatTrans(self, F, [self.coordinates(c)[i] for c in self.cat.objects], validate=False))
        return out

    def tuple_map(self, maps: Sequence[NatTrans]) -> NatTrans:
        """The map ``W -> prod`` with the given components."""
        W = maps[0].source
        comps = []
        for c in self.cat.objects:
            if self.sizes[c] == 0 or W.sizes[c] == 0:
                comps.append(np.zeros(W.sizes[c], IDX))
                continue
            comps.append(np.ravel_multi_index(tuple(m.comps[c] for m in maps), tuple(self.shape[:, c])))
        return NatTrans(W, self, comps, validate=False)


def product(X: Presheaf, Y: Presheaf) -> ProductPresheaf:
    return ProductPresheaf([X, Y])


def product_n(factors: Sequence[Presheaf], cat: FinCategory | None = None) -> Presheaf:
    if not factors:
        return terminal(cat)
    return ProductPresheaf(factors)


def product_map(P: ProductPresheaf, Q: ProductPresheaf, maps: Sequence[NatTrans]) -> NatTrans:
    """``f1 x ... x fk : P -> Q``."""
    return Q.tuple_map([pr.then(m) for pr, m in zip(P.projections, maps)])


class CoproductPresheaf(Presheaf):
    def __init__(self, X: Presheaf, Y: Presheaf):
        if X.cat != Y.cat:
            raise BaseMismatch("coproduct of presheaves on different bases")
        cat = X.cat
        self.left, self.right = X, Y
        act = [np.concatenate([X.act[f], Y.act[f] + X.sizes[cat.src[f]]]) for f in cat.morphisms]
        labels = [[("L", X.label(c, k)) for k in range(X.sizes[c])] + [("R", Y.label(c, k)) for k in range(Y.sizes[c])] for c in cat.objects]
        super().__init__(cat, X.sizes + Y.sizes, act, labels)
        self.inl = NatTrans(X, self, [np.arange(n) for n in X.sizes], validate=False)
        self.inr = NatTrans(Y, self, [np.arange(n) + X.sizes[c] for c, n in enumerate(Y.sizes)], validate=False)

    def copair(self, h: NatTrans, k: NatTrans) -> NatTrans:
        return NatTrans(self, h.target, [np.concatenate([a, b]) for a, b in zip(h.comps, k.comps)])


def coproduct(X: Presheaf, Y: Presheaf) -> CoproductPresheaf:
    return CoproductPresheaf(X, Y)


# ---------------------------------------------------------------------------
# Pullbacks and pushouts
# ---------------------------------------------------------------------------


class PullbackPresheaf(Presheaf):
    """Stagewise pairs ``(x, y)`` with ``f(x) = g(y)``, ordered by ``(x, y)``."""

    def __init__(self, f: NatTrans, g: NatTrans):
        if f.cat != g.cat:
            raise BaseMismatch("pullback of maps on different bases")
        if f.target is not g.target and not f.target.same(g.target):
            raise TargetMismatch("pullback legs have different targets")
        cat = f.cat
        self.f, self.g = f, g
        X, Y = f.source, g.source
        pairs = []
        for c in cat.objects:
            xs, ys = np.nonzero(f.comps[c][:, None] == g.comps[c][None, :])
            pairs.append((xs.astype(IDX), ys.astype(IDX)))
        budget_check(sum(len(p[0]) for p in pairs), "pullback")
        self._pairs = pairs
        act = []
        for h in cat.morphisms:
            c, d = cat.src[h], cat.tgt[h]
            xs, ys = pairs[d]
            act.append(self._locate(c, X.act[h][xs], Y.act[h][ys]))
        labels = [[(X.label(c, int(x)), Y.label(c, int(y))) for x, y in zip(*pairs[c])] for c in cat.objects]
        super().__init__(cat, [len(p[0]) for p in pairs], act, labels)
        self.p1 = NatTrans(self, X, [p[0] for p in pairs], validate=False)
        self.p2 = NatTrans(self, Y, [p[1] for p in pairs], validate=False)

    def _locate(self, c: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        px, py = self._pairs[c]
        ny = self.g.source.sizes[c]
        keys = px * ny + py
        q = xs * ny + ys
        return np.searchsorted(keys, q).astype(IDX)

    def mediate(self, h: NatTrans, k: NatTrans) -> NatTrans:
        """The unique map ``W -> pullback`` through the cone ``(h, k)``."""
        if not h.then(self.f).same(k.then(self.g)):
            raise NotUniversal("competing cone does not commute")
        comps = [self._locate(c, h.comps[c], k.comps[c]) if len(h.comps[c]) else np.zeros(0, IDX) for c in self.cat.objects]
        return NatTrans(h.source, self, comps)


def pullback(f: NatTrans, g: NatTrans) -> PullbackPresheaf:
    return PullbackPresheaf(f, g)


def equalizer_subobject(f: NatTrans, g: NatTrans) -> Subobject:
    return Subobject(f.source, [a == b for a, b in zip(f.comps, g.comps)])


class PushoutPresheaf(Presheaf):
    """Stagewise disjoint union quotiented by ``f(w) ~ g(w)``.

    Classes are numbered by their least member, left summand first, and
    labelled by that member.
    """

    def __init__(self, f: NatTrans, g: NatTrans):
        if f.cat != g.cat:
            raise BaseMismatch("pushout of maps on different bases")
        if f.source is not g.source and not f.source.same(g.source):
            raise SourceMismatch("pushout legs have different sources")
        cat = f.cat
        self.f, self.g = f, g
        X, Y = f.target, g.target
        budget_check(X.total + Y.total, "pushout")
        cls_of = []
        reps = []
        for c in cat.objects:
            nx = int(X.sizes[c])
            n = nx + int(Y.sizes[c])
            lab = kernels.union_find(n, _arr(f.comps[c]), _arr(g.comps[c]) + nx)
            cls_of.append(_arr(lab))
            first = np.full(int(lab.max()) + 1 if n else 0, n, dtype=IDX)
            np.minimum.at(first, lab, np.arange(n))
            reps.append(first)
        act = []
        for h in cat.morphisms:
            c, d = cat.src[h], cat.tgt[h]
            nxd, nxc = X.sizes[d], X.sizes[c]
            rep = reps[d]
            is_left = rep < nxd
            img = np.where(is_left, X.act[h][np.minimum(rep, max(nxd - 1, 0))] if nxd else 0, 0)
            if Y.sizes[d]:
                imgy = Y.act[h][np.clip(rep - nxd, 0, Y.sizes[d] - 1)] + nxc
                img = np.where(is_left, img, imgy)
            act.append(cls_of[c][img] if len(rep) else np.zeros(0, IDX))
        labels = []
        for c in cat.objects:
            nx = X.sizes[c]
            labels.append([("L", X.label(c, int(r))) if r < nx else ("R", Y.label(c, int(r - nx))) for r in reps[c]])
        self._classes = cls_of
        self._reps = reps
        super().__init__(cat, [len(r) for r in reps], act, labels)
        self._check_saturated()
        self.inl = NatTrans(X, self, [cl[: X.sizes[c]] for c, cl in enumerate(cls_of)], validate=False)
        self.inr = NatTrans(Y, self, [cl[X.sizes[c] :] for c, cl in enumerate(cls_of)], validate=False)

    def _check_saturated(self) -> None:
        # The induced action must not depend on the chosen representative.
        cat = self.cat
        X, Y = self.f.target, self.g.target
        for h in cat.non_identities:
            c, d = cat.src[h], cat.tgt[h]
            members = np.concatenate([X.act[h], Y.act[h] + X.sizes[c]]) if (X.sizes[d] + Y.sizes[d]) else np.zeros(0, IDX)
            lhs = self._classes[c][members] if len(members) else members
            rhs = self.act[h][self._classes[d]] if len(members) else members
            if not np.array_equal(lhs, rhs):
                raise FunctorLawFailure("pushout quotient is not restriction-stable")

    def representative(self, c: int, k: int) -> tuple[str, int]:
        """Least member of class ``k``: ``("L", x)`` or ``("R", y)``."""
        r = int(self._reps[c][k])
        nx = int(self.f.target.sizes[c])
        return ("L", r) if r < nx else ("R", r - nx)

    def mediate(self, h: NatTrans, k: NatTrans) -> NatTrans:
        """The unique map ``pushout -> Z`` out of the cocone ``(h, k)``."""
        if not self.f.then(h).same(self.g.then(k)):
            raise NotUniversal("competing cocone does not commute")
        comps = []
        for c in self.cat.objects:
            vals = np.concatenate([h.comps[c], k.comps[c]]).astype(IDX)
            out = np.zeros(self.sizes[c], dtype=IDX)
            out[self._classes[c]] = vals
            if not np.array_equal(out[self._classes[c]], vals):
                raise NotUniversal("cocone is not constant on a class")
            comps.append(out)
        return NatTrans(self, h.target, comps)


def pushout(f: NatTrans, g: NatTrans) -> PushoutPresheaf:
    return PushoutPresheaf(f, g)


# ---------------------------------------------------------------------------
# Hom enumeration
# ---------------------------------------------------------------------------


def homs(X: Presheaf, Y: Presheaf, allowed: np.ndarray | None = None, limit: int | None = None) -> np.ndarray:
    """All natural transformations ``X -> Y`` as flattened rows.

    Row ``r`` holds the value of each element of ``X`` (stage-major order).
    ``allowed[v, y]`` optionally restricts the value of element ``v``.
    Rows come out sorted lexicographically.
    """
    if X.cat != Y.cat:
        raise BaseMismatch("hom-set between presheaves on different bases")
    cat = X.cat
    limit = get_budget() if limit is None else limit
    offs = X.offsets
    n_vars = X.total
    var_obj = np.repeat(np.arange(cat.n_objects), X.sizes)
    dom = Y.sizes[var_obj].astype(IDX)
    maxd = max(int(dom.max()) if n_vars else 0, 1)
    mask = np.arange(maxd)[None, :] < dom[:, None]
    if allowed is not None:
        allowed = np.asarray(allowed, dtype=bool)
        mask[:, : allowed.shape[1]] &= allowed[:, :maxd]
        mask[:, allowed.shape[1] :] = False
    obj_order = sorted(cat.objects, key=lambda c: (-len(cat.into(c)), c))
    order = np.concatenate([np.arange(offs[c], offs[c + 1]) for c in obj_order] + [np.zeros(0, IDX)]).astype(IDX)
    pos = np.empty(n_vars, dtype=IDX)
    pos[order] = np.arange(n_vars)
    ymap_off = np.concatenate([[0], np.cumsum([len(Y.act[f]) for f in cat.morphisms])]).astype(IDX)
    ymaps = np.concatenate([Y.act[f] for f in cat.morphisms] + [np.zeros(0, IDX)]).astype(IDX)
    at, other, kind, off = [], [], [], []
    for f in cat.non_identities:
        c, d = cat.src[f], cat.tgt[f]
        if not X.sizes[d]:
            continue
        u = offs[d] + np.arange(X.sizes[d])
        w = offs[c] + X.act[f]
        same = u == w
        w_later = pos[w] > pos[u]
        at.append(np.where(same, pos[u], np.where(w_later, pos[w], pos[u])))
        other.append(np.where(w_later, u, w))
        kind.append(np.where(same, 2, np.where(w_later, 0, 1)))
        off.append(np.full(len(u), ymap_off[f], dtype=IDX))
    if at:
        at_a = np.concatenate(at)
        srt = np.argsort(at_a, kind="stable")
        chk_other = np.concatenate(other)[srt].astype(IDX)
        chk_dir = np.concatenate(kind)[srt].astype(IDX)
        chk_off = np.concatenate(off)[srt].astype(IDX)
        counts = np.bincount(at_a, minlength=n_vars)
    else:
        chk_other = chk_dir = chk_off = np.zeros(0, IDX)
        counts = np.zeros(n_vars, IDX)
    chk_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(IDX)
    rows, overflow = kernels.enumerate_assignments(
        order, dom, np.ascontiguousarray(mask), chk_ptr, chk_other, chk_dir, chk_off, ymaps, int(limit)
    )
    if overflow:
        raise BudgetExceeded("natural transformations", f">{limit}", limit)
    if rows.shape[1] and len(rows) > 1:
        rows = rows[np.lexsort(rows.T[::-1])]
    return rows


def nat_list(X: Presheaf, Y: Presheaf, **kw) -> list[NatTrans]:
    return [NatTrans.from_row(X, Y, r) for r in homs(X, Y, **kw)]


# ---------------------------------------------------------------------------
# Row lookup (hash-consing of exponential elements)
# ---------------------------------------------------------------------------


class RowIndex:
    """Sorted table of integer rows supporting vectorised lookup."""

    def __init__(self, rows: np.ndarray):
        self.rows = np.ascontiguousarray(rows, dtype=IDX)
        self.width = self.rows.shape[1]
        if self.width:
            keys = self._keys(self.rows)
            self._perm = np.argsort(keys, kind="stable")
            self._sorted = keys[self._perm]

    def _keys(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=IDX)
        return rows.view(np.dtype((np.void, 8 * self.width))).ravel()

    def lookup(self, queries: np.ndarray) -> np.ndarray:
        """Indices of ``queries`` rows; ``-1`` where absent."""
        queries = np.asarray(queries, dtype=IDX)
        if queries.ndim == 1:
            queries = queries[None, :]
        if not self.width:
            return np.zeros(len(queries), IDX) if len(self.rows) else np.full(len(queries), -1, IDX)
        if not len(self.rows):
            return np.full(len(queries), -1, IDX)
        q = self._keys(queries)
        pos = np.searchsorted(self._sorted, q)
        pos_c = np.minimum(pos, len(self._sorted) - 1)
        hit = self._sorted[pos_c] == q
        return np.where(hit, self._perm[pos_c], -1).astype(IDX)

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Exponentials
# ---------------------------------------------------------------------------


class ExponentialPresheaf(Presheaf):
    """``Y^X``: stage ``c`` is ``Nat(y(c) x X, Y)``.

    Element ``k`` at stage ``c`` is the row ``rows[c][k]`` holding
    ``theta(g, x)`` for every ``g: d -> c`` and ``x`` in ``X(d)``.
    """

    def __init__(self, X: Presheaf, Y: Presheaf):
        if X.cat != Y.cat:
            raise BaseMismatch("exponential of presheaves on different bases")
        cat = X.cat
        self.cat = cat
        self.base, self.value_object = X, Y
        self.domains = [product(representable(cat, c), X) for c in cat.objects]
        budget_left = get_budget()
        rows, tables = [], []
        for c in cat.objects:
            r = homs(self.domains[c], Y, limit=budget_left)
            budget_left -= len(r)
            if budget_left < 0:
                raise BudgetExceeded("exponential", ">budget", get_budget())
            rows.append(r)
            tables.append(RowIndex(r))
        self.rows = rows
        self.tables = tables
        act = []
        for f in cat.morphisms:
            c2, c = cat.src[f], cat.tgt[f]
            sel = self._selection(f)
            if not len(rows[c]):
                act.append(np.zeros(0, IDX))
                continue
            found = tables[c2].lookup(rows[c][:, sel])
            if np.any(found < 0):
                raise FunctorLawFailure("restricted family is not natural")
            act.append(found)
        super().__init__(cat, [len(r) for r in rows], act)

    def _selection(self, f: int) -> np.ndarray:
        """Position in ``domains[c]`` of ``(f.g', x)`` for each ``(g', x)`` of ``domains[c']``."""
        cat = self.cat
        c2, c = cat.src[f], cat.tgt[f]
        D = self.domains[c]
        pos = cat.hom_position
        parts = []
        for d in cat.objects:
            hs = cat.hom(d, c2)
            nx = self.base.sizes[d]
            if not len(hs) or not nx:
                continue
            gi = pos[cat.comp[f, hs]]
            parts.append(D.offsets[d] + (gi[:, None] * nx + np.arange(nx)[None, :]).ravel())
        return np.concatenate(parts).astype(IDX) if parts else np.zeros(0, IDX)

    def label(self, c: int, k: int) -> Hashable:
        D = self.domains[c]
        stages = np.repeat(np.arange(self.cat.n_objects), D.sizes)
        return tuple(self.value_object.label(int(d), int(v)) for d, v in zip(stages, self.rows[c][k]))

    def slot(self, c: int, g: int, x: int) -> int:
        """Column of ``theta(g, x)`` in a stage-``c`` row."""
        d = int(self.cat.src[g])
        return int(self.domains[c].offsets[d] + self.cat.hom_position[g] * self.base.sizes[d] + x)

    def value(self, c: int, k: int, g: int, x: int) -> int:
        return int(self.rows[c][k, self.slot(c, g, x)])

    def element(self, c: int, fn: Callable[[int, int], int]) -> int:
        """Index of the family ``(g, x) -> fn(g, x)`` at stage ``c``."""
        cat = self.cat
        row = np.zeros(self.domains[c].total, dtype=IDX)
        for d in cat.objects:
            for g in cat.hom(d, c):
                for x in range(self.base.sizes[d]):
                    row[self.slot(c, g, x)] = fn(int(g), x)
        k = int(self.tables[c].lookup(row[None, :])[0])
        if k < 0:
            raise NaturalityFailure(None, "family is not natural")
        return k

    def lookup(self, c: int, rows: np.ndarray) -> np.ndarray:
        return self.tables[c].lookup(rows)

    def id_columns(self, c: int) -> np.ndarray:
        """Columns holding ``theta(id_c, x)`` for ``x`` in ``X(c)``."""
        return np.array([self.slot(c, int(self.cat.identity[c]), x) for x in range(self.base.sizes[c])], dtype=IDX)

    @cached_property
    def ev_domain(self) -> ProductPresheaf:
        return product(self, self.base)

    @cached_property
    def ev(self) -> NatTrans:
        P = self.ev_domain
        comps = []
        for c in self.cat.objects:
            th, x = P.coordinates(c)
            cols = self.id_columns(c)
            comps.append(self.rows[c][th, cols[x]] if len(th) else np.zeros(0, IDX))
        return NatTrans(P, self.value_object, comps, validate=False)

    def curry(self, h: NatTrans, WX: ProductPresheaf | None = None) -> NatTrans:
        """``h: W x X -> Y`` to ``W -> Y^X``."""
        WX = WX or h.source
        W = WX.factors[0]
        cat = self.cat
        comps = []
        for c in cat.objects:
            D = self.domains[c]
            q = np.zeros((W.sizes[c], D.total), dtype=IDX)
            for d in cat.objects:
                for g in cat.hom(d, c):
                    wg = W.act[g]
                    for x in range(self.base.sizes[d]):
                        idx = wg * WX.shape[1, d] + x
                        q[:, self.slot(c, g, x)] = h.comps[d][idx]
            found = self.tables[c].lookup(q) if W.sizes[c] else np.zeros(0, IDX)
            comps.append(found)
        return NatTrans(W, self, comps)

    def uncurry(self, k: NatTrans, WX: ProductPresheaf | None = None) -> NatTrans:
        """``k: W -> Y^X`` to ``W x X -> Y``."""
        W = k.source
        WX = WX or product(W, self.base)
        return product_map(WX, self.ev_domain, [k, self.base.identity()]).then(self.ev)


def exponential(X: Presheaf, Y: Presheaf) -> ExponentialPresheaf:
    return ExponentialPresheaf(X, Y)


def precomposition(EB: ExponentialPresheaf, EA: ExponentialPresheaf, f: NatTrans) -> NatTrans:
    """``C^B -> C^A`` sending ``theta`` to ``theta . (y(c) x f)``."""
    cat = EB.cat
    comps = []
    for c in cat.objects:
        sel = np.zeros(EA.domains[c].total, dtype=IDX)
        for d in cat.objects:
            for g in cat.hom(d, c):
                for a in range(EA.base.sizes[d]):
                    sel[EA.slot(c, g, a)] = EB.slot(c, g, int(f.comps[d][a]))
        rows = EB.rows[c][:, sel] if len(EB.rows[c]) else np.zeros((0, len(sel)), IDX)
        found = EA.lookup(c, rows) if len(rows) else np.zeros(0, IDX)
        comps.append(found)
    return NatTrans(EB, EA, comps)


def postcomposition(EX: ExponentialPresheaf, EY: ExponentialPresheaf, h: NatTrans) -> NatTrans:
    """``A^X -> B^X`` sending ``theta`` to ``h . theta``."""
    comps = []
    for c in EX.cat.objects:
        D = EX.domains[c]
        ds = np.repeat(np.arange(EX.cat.n_objects), D.sizes)
        rows = EX.rows[c]
        out = np.zeros_like(rows)
        for d in EX.cat.objects:
            cols = np.flatnonzero(ds == d)
            if len(cols) and len(rows):
                out[:, cols] = h.comps[d][rows[:, cols]]
        comps.append(EY.lookup(c, out) if len(rows) else np.zeros(0, IDX))
    return NatTrans(EX, EY, comps)


# ---------------------------------------------------------------------------
# Subobject classifier
# ---------------------------------------------------------------------------


class OmegaPresheaf(Presheaf):
    """Stage ``c`` lists the sieves on ``c`` ordered by (size, members)."""

    def __init__(self, cat: FinCategory):
        sieves = []
        for c in cat.objects:
            into = cat.into(c)
            principal = []
            for f in into:
                gs = cat.into(cat.src[f])
                principal.append(frozenset(int(cat.comp[f, g]) for g in gs))
            found = {frozenset()}
            frontier = [frozenset()]
            while frontier:
                nxt = []
                for s in frontier:
                    for p in principal:
                        u = s | p
                        if u not in found:
                            found.add(u)
                            nxt.append(u)
                frontier = nxt
                budget_check(len(found), "sieves")
            sieves.append(sorted(found, key=lambda s: (len(s), sorted(s))))
        self.sieves = sieves
        self.sieve_index = [{s: k for k, s in enumerate(ss)} for ss in sieves]
        act = []
        for f in cat.morphisms:
            c2, c = cat.src[f], cat.tgt[f]
            into2 = cat.into(c2)
            act.append(np.array([self.sieve_index[c2][frozenset(int(g) for g in into2 if int(cat.comp[f, g]) in s)] for s in sieves[c]], dtype=IDX))
        labels = [[tuple(sorted(s)) for s in ss] for ss in sieves]
        super().__init__(cat, [len(s) for s in sieves], act, labels)
        self.top_index = np.array([self.sieve_index[c][frozenset(int(g) for g in cat.into(c))] for c in cat.objects], dtype=IDX)
        self.bottom_index = np.zeros(cat.n_objects, dtype=IDX)
        self.true = NatTrans(terminal(cat), self, [[t] for t in self.top_index])
        self.truth = Subobject(self, [np.arange(n) == t for n, t in zip(self.sizes, self.top_index)])


_OMEGA_CACHE: dict[tuple, OmegaPresheaf] = {}


def omega(cat: FinCategory) -> OmegaPresheaf:
    om = _OMEGA_CACHE.get(cat.key)
    if om is None:
        om = _OMEGA_CACHE.setdefault(cat.key, OmegaPresheaf(cat))
    return om


def characteristic_map(S: Subobject) -> NatTrans:
    X = S.ambient
    cat = X.cat
    Om = omega(cat)
    comps = []
    for c in cat.objects:
        into = cat.into(c)
        member = np.array([S.masks[cat.src[g]][X.act[g]] for g in into]).reshape(len(into), X.sizes[c])
        comps.append(
            np.array([Om.sieve_index[c][frozenset(int(g) for g in into[member[:, x]])] for x in range(X.sizes[c])], dtype=IDX)
        )
    return NatTrans(X, Om, comps)


def classify(chi: NatTrans) -> Subobject:
    Om = omega(chi.cat)
    return Subobject(chi.source, [a == t for a, t in zip(chi.comps, Om.top_index)])


# ---------------------------------------------------------------------------
# Monos, epis, isos, images
# ---------------------------------------------------------------------------


def is_mono(f: NatTrans) -> bool:
    return all(len(np.unique(a)) == len(a) for a in f.comps)


def is_epi(f: NatTrans) -> bool:
    return all(len(np.unique(a)) == n for a, n in zip(f.comps, f.target.sizes))


def inverse(f: NatTrans) -> NatTrans | None:
    if not (np.array_equal(f.source.sizes, f.target.sizes) and is_mono(f)):
        return None
    comps = []
    for a in f.comps:
        inv = np.empty(len(a), dtype=IDX)
        inv[a] = np.arange(len(a))
        comps.append(inv)
    return NatTrans(f.target, f.source, comps, validate=False)


def is_iso(f: NatTrans) -> tuple[bool, NatTrans | None]:
    inv = inverse(f)
    return inv is not None, inv


def image(f: NatTrans) -> Subobject:
    masks = []
    for a, n in zip(f.comps, f.target.sizes):
        m = np.zeros(n, dtype=bool)
        m[a] = True
        masks.append(m)
    return Subobject(f.target, masks)


def preimage(f: NatTrans, S: Subobject) -> Subobject:
    return Subobject(f.source, [m[a] for a, m in zip(f.comps, S.masks)])


# ---------------------------------------------------------------------------
# Category of elements, reindexing, totals and fibers
# ---------------------------------------------------------------------------


class ElementsCategory(FinCategory):
    """Objects ``(c, x)`` with ``x`` in ``P(c)``; a morphism ``(f, x)`` with
    ``f: c -> d`` and ``x`` in ``P(d)`` goes from ``(c, x.f)`` to ``(d, x)``.
    """

    def __init__(self, P: Presheaf):
        cat = P.cat
        self.presheaf = P
        po = P.offsets
        obj_base = np.repeat(np.arange(cat.n_objects), P.sizes).astype(IDX)
        obj_elem = (np.arange(P.total) - po[obj_base]).astype(IDX)
        mor_sizes = P.sizes[cat.tgt]
        mor_base = np.repeat(np.arange(cat.n_morphisms), mor_sizes).astype(IDX)
        mo = np.concatenate([[0], np.cumsum(mor_sizes)]).astype(IDX)
        mor_elem = (np.arange(len(mor_base)) - mo[mor_base]).astype(IDX)
        m = len(mor_base)
        budget_check(m * m, "elements category composition table")
        src = po[cat.src[mor_base]] + np.array([P.act[f][x] for f, x in zip(mor_base, mor_elem)], dtype=IDX) if m else np.zeros(0, IDX)
        tgt = po[cat.tgt[mor_base]] + mor_elem
        ident = mo[cat.identity[obj_base]] + obj_elem
        comp = np.full((m, m), -1, dtype=IDX)
        for f in cat.morphisms:
            for g in cat.morphisms:
                h = cat.comp[g, f]
                if h < 0:
                    continue
                # (g, y) . (f, y.g) = (g.f, y)
                ys = np.arange(P.sizes[cat.tgt[g]])
                comp[mo[g] + ys, mo[f] + P.act[g][ys]] = mo[h] + ys
        onames = [f"({cat.obj_names[c]},{P.label(c, int(x))})" for c, x in zip(obj_base, obj_elem)]
        mnames = [f"({cat.mor_names[f]},{P.label(int(cat.tgt[f]), int(x))})" for f, x in zip(mor_base, mor_elem)]
        self.base = cat
        self.proj_obj = obj_base
        self.elem = obj_elem
        self.proj_mor = mor_base
        self.mor_elem = mor_elem
        self.mor_offsets = mo
        super().__init__(P.total, src, tgt, ident, comp, onames, mnames, validate=False)

    def obj_index(self, c: int, x: int) -> int:
        return int(self.presheaf.offsets[c] + x)

    def mor_index(self, f: int, x: int) -> int:
        return int(self.mor_offsets[f] + x)

    @cached_property
    def projection(self) -> FinFunctor:
        return FinFunctor(self, self.base, self.proj_obj, self.proj_mor, validate=False)


def elements_category(P: Presheaf) -> ElementsCategory:
    E = getattr(P, "_elements_category", None)
    if E is None:
        E = ElementsCategory(P)
        P._elements_category = E
    return E


def reindex(P: Presheaf, F: FinFunctor) -> Presheaf:
    """``P . F`` for a functor ``F`` into the base of ``P``."""
    if F.target != P.cat:
        raise BaseMismatch("reindexing along a functor with the wrong codomain")
    labels = [P.labels[c] for c in F.obj] if P.labels is not None else None
    return Presheaf(F.source, P.sizes[F.obj], [P.act[f] for f in F.mor], labels, validate=False)


def reindex_map(h: NatTrans, F: FinFunctor, source: Presheaf | None = None, target: Presheaf | None = None) -> NatTrans:
    source = source or reindex(h.source, F)
    target = target or reindex(h.target, F)
    return NatTrans(source, target, [h.comps[c] for c in F.obj], validate=False)


def pull_to_elements(X: Presheaf, E: ElementsCategory) -> Presheaf:
    """The constant family ``X`` over the elements of ``E.presheaf``."""
    return reindex(X, E.projection)


class TotalPresheaf(Presheaf):
    """Sum of a family ``G`` over the elements of ``P``, with projection to ``P``.

    Stage ``c`` lists pairs ``(x, e)`` with ``x`` in ``P(c)`` and ``e`` in
    ``G(c, x)``, ordered by ``x`` then ``e``.
    """

    def __init__(self, G: Presheaf, E: ElementsCategory):
        if G.cat != E:
            raise BaseMismatch("family does not live over the given elements category")
        P = E.presheaf
        cat = P.cat
        self.family = G
        self.elements = E
        fib_off = []
        for c in cat.objects:
            ks = [E.obj_index(c, x) for x in range(P.sizes[c])]
            fib_off.append(np.concatenate([[0], np.cumsum(G.sizes[ks])]).astype(IDX) if ks else np.zeros(1, IDX))
        self.fiber_offsets = fib_off
        sizes = [int(o[-1]) for o in fib_off]
        budget_check(sum(sizes), "total")
        act = []
        for f in cat.morphisms:
            c, d = cat.src[f], cat.tgt[f]
            parts = []
            for x in range(P.sizes[d]):
                m = E.mor_index(f, x)
                xc = int(P.act[f][x])
                parts.append(fib_off[c][xc] + G.act[m])
            act.append(np.concatenate(parts).astype(IDX) if parts else np.zeros(0, IDX))
        labels = []
        for c in cat.objects:
            labs = []
            for x in range(P.sizes[c]):
                k = E.obj_index(c, x)
                labs.extend((P.label(c, x), G.label(k, e)) for e in range(G.sizes[k]))
            labels.append(labs)
        super().__init__(cat, sizes, act, labels)
        self.projection = NatTrans(
            self, P, [np.repeat(np.arange(P.sizes[c]), np.diff(fib_off[c])) for c in cat.objects], validate=False
        )

    def component(self, c: int, k: int) -> tuple[int, int]:
        """``(x, e)`` for element ``k`` at stage ``c``."""
        o = self.fiber_offsets[c]
        x = int(np.searchsorted(o, k, side="right") - 1)
        return x, int(k - o[x])

    def element(self, c: int, x: int, e: int) -> int:
        return int(self.fiber_offsets[c][x] + e)

    def fiber_sizes(self, c: int) -> np.ndarray:
        return np.diff(self.fiber_offsets[c])


def total(G: Presheaf, E: ElementsCategory) -> TotalPresheaf:
    return TotalPresheaf(G, E)


def total_map(h: NatTrans, T1: TotalPresheaf, T2: TotalPresheaf) -> NatTrans:
    """Sum of a map of families over the same elements category."""
    P = T1.elements.presheaf
    comps = []
    for c in P.cat.objects:
        parts = []
        for x in range(P.sizes[c]):
            k = T1.elements.obj_index(c, x)
            parts.append(T2.fiber_offsets[c][x] + h.comps[k])
        comps.append(np.concatenate(parts).astype(IDX) if parts else np.zeros(0, IDX))
    return NatTrans(T1, T2, comps)


def fibers(p: NatTrans, E: ElementsCategory | None = None) -> Presheaf:
    """The family ``x -> p^{-1}(x)`` over the elements of ``p.target``."""
    P = p.target
    E = E or elements_category(P)
    X = p.source
    cat = P.cat
    members = []
    for c in cat.objects:
        order = np.argsort(p.comps[c], kind="stable")
        counts = np.bincount(p.comps[c], minlength=P.sizes[c]) if P.sizes[c] else np.zeros(0, IDX)
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(IDX)
        members.append([order[starts[x] : starts[x + 1]] for x in range(P.sizes[c])])
    sizes = [len(members[c][x]) for c, x in zip(E.proj_obj, E.elem)]
    # position of each element of X(c) inside its fiber
    where = []
    for c in cat.objects:
        w = np.zeros(X.sizes[c], dtype=IDX)
        for mem in members[c]:
            w[mem] = np.arange(len(mem))
        where.append(w)
    act = []
    for m in E.morphisms:
        f, x = E.proj_mor[m], E.mor_elem[m]
        c = cat.src[f]
        act.append(where[c][X.act[f][members[cat.tgt[f]][x]]])
    labels = [[X.label(c, int(e)) for e in members[c][x]] for c, x in zip(E.proj_obj, E.elem)]
    return Presheaf(E, sizes, act, labels)


def fiber_iso(p: NatTrans, T: TotalPresheaf) -> NatTrans:
    """Comparison ``total(fibers(p)) -> p.source``."""
    P = T.elements.presheaf
    X = p.source
    comps = []
    for c in P.cat.objects:
        order = np.argsort(p.comps[c], kind="stable")
        comps.append(order.astype(IDX))
    return NatTrans(T, X, comps)
