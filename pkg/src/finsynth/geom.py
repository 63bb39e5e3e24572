"""Geometric objects over a presheaf model with an interval.

A :class:`Model` bundles a base category with an internal lattice ``J``
(also called ``I``, the interval).  Families over an object ``B`` are
presheaves on the category of elements of ``B``; ``Model.over(B)`` returns
the model on that category, so every construction below works the same way
in a slice.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import fincat as fc
from .errors import ClauseDisagreement, IsoNotFound, NotConnected, NotUniversal
from .fincat import IDX, NatTrans, Presheaf, Subobject
from .kripke import Interpretation, force
from .kripke import syntax as S
from .latdual import FinDistLattice, InternalLattice


def subterminal(cat: fc.FinCategory, mask) -> Presheaf:
    """The proposition holding exactly at the objects in ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    act = []
    for f in cat.morphisms:
        c, d = cat.src[f], cat.tgt[f]
        if mask[d] and not mask[c]:
            raise fc.FunctorLawFailure("proposition is not closed under restriction")
        act.append(np.zeros(int(mask[d]), IDX))
    return Presheaf(cat, mask.astype(IDX), act, [["*"] if m else [] for m in mask])


def renumbering(sub: Subobject) -> list[np.ndarray]:
    """Ambient index to subobject index (``-1`` outside)."""
    out = []
    for m in sub.masks:
        r = np.full(len(m), -1, dtype=IDX)
        r[m] = np.arange(int(m.sum()))
        out.append(r)
    return out


@dataclass
class ConnectedWitness:
    """``X`` is ``P``-connected: ``X^P`` has exactly one element at each stage."""

    prop: Presheaf
    space: Presheaf
    power: fc.ExponentialPresheaf


class Model:
    def __init__(self, lattice: InternalLattice, name: str = ""):
        self.lattice = lattice
        self.base = lattice.cat
        self.J = self.I = lattice.carrier
        self.name = name
        self.one = fc.terminal(self.base)
        self.top_point = lattice.top
        self.bottom_point = lattice.bottom
        J = self.J
        self.T = Subobject(J, [np.arange(n) == t for n, t in zip(J.sizes, lattice.tops)])
        self.F = Subobject(J, [np.arange(n) == b for n, b in zip(J.sizes, lattice.bottoms)])
        self.is_true = fc.characteristic_map(self.T)
        self.is_false = fc.characteristic_map(self.F)
        if not (fc.classify(self.is_true).same(self.T) and fc.image(self.top_point).same(self.T)):
            raise ClauseDisagreement("IsT does not classify the image of top")
        if not (fc.classify(self.is_false).same(self.F) and fc.image(self.bottom_point).same(self.F)):
            raise ClauseDisagreement("IsF does not classify the image of bottom")

    def __repr__(self) -> str:
        return f"Model({self.name or self.lattice!r})"

    @classmethod
    def set_model(cls, L: FinDistLattice, name: str = "") -> "Model":
        return cls(InternalLattice.constant(fc.FinCategory.terminal(), L), name)

    def dualize(self) -> "Model":
        return Model(self.lattice.dual(), f"{self.name}-dual")

    # -- logic ---------------------------------------------------------------
    @cached_property
    def interp(self) -> Interpretation:
        return Interpretation(self.lattice, type_constructors={"Lift": lambda X: self.lift(X).presheaf})

    def interpretation(self, **types: Presheaf) -> Interpretation:
        return self.interp.with_types(**types) if types else self.interp

    # -- points and propositions --------------------------------------------
    def point(self, values) -> NatTrans:
        return fc.global_point(self.J, values)

    @cached_property
    def global_points(self) -> np.ndarray:
        return fc.global_points(self.J)

    def is_t(self, values) -> Presheaf:
        """``IsT(i)`` for a global point given by its stage values."""
        return subterminal(self.base, np.asarray(values) == self.lattice.tops)

    def is_f(self, values) -> Presheaf:
        return subterminal(self.base, np.asarray(values) == self.lattice.bottoms)

    @cached_property
    def is_t0(self) -> Presheaf:
        return self.is_t(self.lattice.bottoms)

    # -- slices --------------------------------------------------------------
    def over(self, P: Presheaf) -> "SliceModel":
        cache = self.__dict__.setdefault("_over", {})
        key = id(P)
        if key not in cache:
            cache[key] = (SliceModel(self, P), P)
        return cache[key][0]

    @property
    def over_interval(self) -> "SliceModel":
        return self.over(self.J)

    # -- joins and connectedness ---------------------------------------------
    def join_with(self, P: Presheaf, X: Presheaf) -> tuple[fc.PushoutPresheaf, NatTrans]:
        """``P * X`` and the constructor ``X -> P * X``."""
        PX = fc.product(P, X)
        po = fc.pushout(PX.projections[0], PX.projections[1])
        return po, po.inr

    def is_p_connected(self, P: Presheaf, X: Presheaf) -> tuple[bool, ConnectedWitness | None]:
        power = fc.exponential(P, X)
        contractible = bool(np.all(power.sizes == 1))
        _, ctor = self.join_with(P, X)
        absorbed = fc.is_iso(ctor)[0]
        if contractible != absorbed:
            raise ClauseDisagreement("X^P contractible and X ~ P*X disagree")
        return contractible, ConnectedWitness(P, X, power) if contractible else None

    def connected_witness(self, X: Presheaf) -> ConnectedWitness:
        ok, w = self.is_p_connected(self.is_t0, X)
        if not ok:
            raise NotConnected("space is not IsT(0)-connected")
        return w

    # -- cubes, simplices, slices, horn --------------------------------------
    def cube(self, n: int) -> Presheaf:
        return fc.product_n([self.J] * n, self.base)

    def chain_formula(self, names: list[str]):
        conds = [S.Eq(S.App("meet", (S.Name(a), S.Name(b))), S.Name(b)) for a, b in zip(names, names[1:])]
        return S.conj(*conds) if conds else S.Top()

    def simplex_sub(self, n: int) -> Subobject:
        """``x1 >= ... >= xn`` as a subobject of the cube."""
        names = [f"x{k + 1}" for k in range(n)]
        ctx = tuple((a, self.J) for a in names)
        return force(self.interp, ctx, self.chain_formula(names)).truth

    def simplex(self, n: int) -> Presheaf:
        return self.simplex_sub(n).presheaf()

    @cached_property
    def delta2(self) -> Subobject:
        return self.simplex_sub(2)

    def slice(self) -> tuple[Presheaf, NatTrans]:
        """``{(i, j) | i >= j}`` with its projection to ``i``."""
        sub = self.delta2
        P, inc = sub.presheaf(), sub.inclusion
        return P, inc.then(sub.ambient.projections[0])

    def slice_family(self) -> "FamilyOverI":
        """The family ``i -> I/i`` over the elements of ``I``."""
        M = self.over_interval
        Jg = M.J
        E = M.elements
        gen = M.generic_values
        mask = [M.lattice.stages[k].leq_matrix[:, gen[k]] for k in E.objects]
        sub = Subobject(Jg, mask)
        fam = sub.presheaf()
        tot = fc.total(fam, E)
        # compare with the simplex: (i, j) -> (i, j)
        ren = renumbering(self.delta2)
        cube = self.delta2.ambient
        comps = []
        for c in self.base.objects:
            arr = np.zeros(tot.sizes[c], IDX)
            for k in range(tot.sizes[c]):
                i, e = tot.component(c, k)
                j = int(sub.inclusion.comps[E.obj_index(c, i)][e])
                arr[k] = ren[c][cube.pair(c, i, j)]
            comps.append(arr)
        cmp = NatTrans(tot, self.delta2.presheaf(), comps)
        ok, _ = fc.is_iso(cmp)
        if not ok:
            raise IsoNotFound("sum of slices is not the 2-simplex")
        return FamilyOverI(fam, tot, cmp, sub.inclusion)

    @cached_property
    def horn_sub(self) -> Subobject:
        """``{(i >= j) | IsF(j) or IsT(i)}`` inside the 2-simplex."""
        phi = S.Or(S.Mem("IsF", (S.Name("j"),)), S.Mem("IsT", (S.Name("i"),)))
        cut = force(self.interp, (("i", self.J), ("j", self.J)), phi).truth
        D = self.delta2
        members = [np.flatnonzero(m) for m in D.masks]
        return Subobject(D.presheaf(), [cut.masks[c][members[c]] for c in self.base.objects])

    def horn(self) -> Presheaf:
        return self.horn_sub.presheaf()

    # -- scone -----------------------------------------------------------------
    def scone(self, X: Presheaf) -> "SconeObj":
        return SconeObj(self, X)

    def scone_family(self) -> "FamilyOverI":
        """``i -> IsT(i)_bot`` over the elements of ``I``, with its iso to the horn."""
        M = self.over_interval
        E = M.elements
        sc = M.scone(M.generic_true)
        tot = fc.total(sc.presheaf, E)
        horn = self.horn_sub
        ren_h = renumbering(horn)
        ren_d = renumbering(self.delta2)
        cube = self.delta2.ambient
        comps = []
        for c in self.base.objects:
            arr = np.zeros(tot.sizes[c], IDX)
            for k in range(tot.sizes[c]):
                i, e = tot.component(c, k)
                j = sc.proj(E.obj_index(c, i), e)
                d = ren_d[c][cube.pair(c, i, j)]
                if d < 0 or ren_h[c][d] < 0:
                    raise IsoNotFound("scone family element lands outside the horn")
                arr[k] = ren_h[c][d]
            comps.append(arr)
        cmp = NatTrans(tot, horn.presheaf(), comps)
        ok, _ = fc.is_iso(cmp)
        if not ok:
            raise IsoNotFound("sum of little scones is not the horn")
        return FamilyOverI(sc.presheaf, tot, cmp, sc.proj_map)

    # -- partial map classifier ----------------------------------------------
    def lift(self, X: Presheaf) -> "LiftObj":
        cache = self.__dict__.setdefault("_lift", {})
        hit = cache.get(id(X))
        if hit is None:
            hit = cache[id(X)] = (LiftObj(self, X), X)
        return hit[0]

    def sigma(self, X: Presheaf, witness: ConnectedWitness | None = None) -> NatTrans:
        """``sigma_X: X_bot -> Lift(X)``, built two ways and compared."""
        if witness is None:
            witness = self.connected_witness(X)
        sc = self.scone(X)
        L = self.lift(X)
        via_pushout = sc.pushout.mediate(L.undef(witness), L.glue())
        via_lift = L.classify(sc.presheaf, sc.proj_map, sc.decode)
        if not via_pushout.same(via_lift):
            raise ClauseDisagreement("pushout and partial-map constructions of sigma differ")
        return via_pushout

    def slice_vs_lift(self, values) -> tuple[bool, int, int]:
        """Compare ``I/i`` with ``Lift(IsT(i))`` for a global point ``i``."""
        P = self.is_t(values)
        L = self.lift(P)
        comps = []
        for c in self.base.objects:
            Lc = self.lattice.stages[c]
            below = np.flatnonzero(Lc.leq_matrix[:, values[c]])
            comps.append(np.array([L.encode(c, int(j), lambda g: 0) for j in below], dtype=IDX))
        sl = Subobject(self.J, [self.lattice.stages[c].leq_matrix[:, values[c]] for c in self.base.objects]).presheaf()
        cmp = NatTrans(sl, L.presheaf, comps)
        return fc.is_iso(cmp)[0], int(sl.total), int(L.presheaf.total)

    # -- cylinders over a map ------------------------------------------------
    def open_cylinder(self, f: NatTrans) -> "CylinderObj":
        return CylinderObj(self, f)

    def relative_lift(self, f: NatTrans) -> tuple[fc.TotalPresheaf, "LiftObj", "SliceModel"]:
        """``Sum_{b:B} Lift(fib_f b)`` with its projection to ``B``."""
        M = self.over(f.target)
        G = fc.fibers(f, M.elements)
        L = M.lift(G)
        return fc.total(L.presheaf, M.elements), L, M

    def sigma_f(self, f: NatTrans) -> NatTrans:
        """Fibrewise sigma ``Sum_b (fib b)_bot -> Sum_b Lift(fib b)``."""
        M = self.over(f.target)
        G = fc.fibers(f, M.elements)
        ok, w = M.is_p_connected(M.is_t0, G)
        if not ok:
            raise NotConnected("a fibre is not IsT(0)-connected")
        sig = M.sigma(G, w)
        T1 = fc.total(M.scone(G).presheaf, M.elements)
        T2 = fc.total(M.lift(G).presheaf, M.elements)
        return fc.total_map(sig, T1, T2)

    # -- observational preorder ----------------------------------------------
    def observational_preorder(self, X: Presheaf) -> tuple[np.ndarray, np.ndarray]:
        """Global points of ``X`` and the matrix ``x <= y``."""
        pts = fc.global_points(X)
        obs = fc.homs(X, self.J)
        offs = X.offsets
        n = len(pts)
        rel = np.ones((n, n), dtype=bool)
        for c in self.base.objects:
            leq = self.lattice.stages[c].leq_matrix
            vals = obs[:, offs[c] + pts[:, c]] if n else np.zeros((len(obs), 0), IDX)  # [obs, point]
            rel &= leq[vals[:, :, None], vals[:, None, :]].all(axis=0)
        return pts, rel

    def has_obs_top(self, X: Presheaf) -> tuple[bool, int | None]:
        pts, rel = self.observational_preorder(X)
        for y in range(len(pts)):
            if rel[:, y].all():
                return True, y
        return False, None


class SliceModel(Model):
    """The model on the elements of ``P``, with the generic element of ``P``."""

    def __init__(self, parent: Model, P: Presheaf):
        self.parent = parent
        self.family_base = P
        self.elements = fc.elements_category(P)
        super().__init__(parent.lattice.reindex(self.elements.projection), f"{parent.name}/over")

    @cached_property
    def generic_values(self) -> np.ndarray:
        return self.elements.elem

    @cached_property
    def generic_true(self) -> Presheaf:
        """``IsT`` of the generic element, when ``P`` is the interval."""
        return self.is_t(self.generic_values)

    def pull(self, X: Presheaf) -> Presheaf:
        return fc.reindex(X, self.elements.projection)


@dataclass
class FamilyOverI:
    family: Presheaf
    total: fc.TotalPresheaf
    comparison: NatTrans
    structure: NatTrans

    def fiber_sizes(self, c: int = 0) -> list[int]:
        return self.total.fiber_sizes(c).tolist()


class SconeObj:
    """``X_bot``: the pushout of ``1 <- X -> I x X`` along ``x -> (0, x)``."""

    def __init__(self, model: Model, X: Presheaf):
        self.model = model
        self.X = X
        J = model.J
        self.IX = IX = fc.product(J, X)
        bang = fc.to_terminal(X, model.one)
        zero = bang.then(model.bottom_point)
        self.zero_in = IX.tuple_map([zero, X.identity()])
        self.pushout = po = fc.pushout(bang, self.zero_in)
        self.presheaf = po
        self.bottom = po.inl
        self.gamma = po.inr
        one = bang.then(model.top_point)
        self.iota = IX.tuple_map([one, X.identity()]).then(self.gamma)
        self.proj_map = po.mediate(model.bottom_point, IX.projections[0])

    def proj(self, c: int, e: int) -> int:
        return int(self.proj_map.comps[c][e])

    @cached_property
    def _decode_table(self) -> list[dict]:
        out = []
        for c in self.model.base.objects:
            top = int(self.model.lattice.tops[c])
            table = {}
            for x in range(self.X.sizes[c] - 1, -1, -1):
                table[int(self.gamma.comps[c][self.IX.pair(c, top, x)])] = x
            out.append(table)
        return out

    def decode(self, c: int, e: int) -> int:
        """The point ``x`` with ``e = gamma(1, x)``."""
        return self._decode_table[c][e]

    def check_sum_description(self) -> bool:
        """Over the generic ``i``, the fibre of the projection is ``IsF(i) * X``."""
        M = self.model.over_interval
        E = M.elements
        G = fc.fibers(self.proj_map, E)
        Xs = M.pull(self.X)
        Fi = M.is_f(M.generic_values)
        jn, _ = M.join_with(Fi, Xs)
        # position of each element of X_bot(c) inside its fibre
        where = []
        for c in self.model.base.objects:
            w = np.zeros(self.presheaf.sizes[c], IDX)
            for i in range(self.model.J.sizes[c]):
                mem = np.flatnonzero(self.proj_map.comps[c] == i)
                w[mem] = np.arange(len(mem))
            where.append(w)
        h_comps, k_comps = [], []
        for k in E.objects:
            c, i = int(E.proj_obj[k]), int(E.elem[k])
            h_comps.append(np.array([where[c][self.bottom.comps[c][0]]] * int(Fi.sizes[k]), dtype=IDX))
            xs = np.arange(self.X.sizes[c])
            k_comps.append(where[c][self.gamma.comps[c][i * self.X.sizes[c] + xs]] if len(xs) else np.zeros(0, IDX))
        h = NatTrans(Fi, G, h_comps)
        kk = NatTrans(Xs, G, k_comps)
        cmp = jn.mediate(h, kk)
        return fc.is_iso(cmp)[0]

    def pullback_square_holds(self) -> bool:
        """``X`` is the pullback of ``{1} -> I`` along the projection."""
        top_inc = self.model.T.inclusion
        pb = fc.pullback(self.proj_map, top_inc)
        med = pb.mediate(self.iota, fc.to_terminal(self.X, top_inc.source))
        return fc.is_iso(med)[0]


class LiftObj:
    """``Lift(X) = Sum_i X^{IsT i}``.

    Element ``k`` at stage ``c`` is a pair ``(i, theta)`` where ``theta`` is a
    section of ``X`` over the sieve ``{g | i.g = 1}``.
    """

    def __init__(self, model: Model, X: Presheaf):
        self.model = model
        self.X = X
        M = model.over_interval
        self.slice = M
        E = self.elements = M.elements
        self.power = fc.exponential(M.generic_true, M.pull(X))
        self.presheaf = fc.total(self.power, E)
        self.proj_map = self.presheaf.projection

    def proj(self, c: int, k: int) -> int:
        return int(self.proj_map.comps[c][k])

    def split(self, c: int, k: int) -> tuple[int, int]:
        return self.presheaf.component(c, k)

    def encode(self, c: int, i: int, section: Callable[[int], int]) -> int:
        """Element ``(i, g -> section(g))`` at stage ``c``."""
        E = self.elements
        obj = E.obj_index(c, i)
        theta = self.power.element(obj, lambda g, p: section(int(E.proj_mor[g])))
        return self.presheaf.element(c, i, theta)

    def section(self, c: int, k: int) -> dict[int, int]:
        """The section of element ``k`` as ``{g: value}`` over its sieve."""
        E = self.elements
        i, theta = self.split(c, k)
        obj = E.obj_index(c, i)
        defined = self.slice.generic_true.sizes
        out = {}
        for g in self.model.base.into(c):
            m = E.mor_index(int(g), i)
            if defined[E.src[m]]:
                out[int(g)] = self.power.value(obj, theta, m, 0)
        return out

    @cached_property
    def eta(self) -> NatTrans:
        X = self.X
        top = self.model.lattice.tops
        comps = [
            np.array([self.encode(c, int(top[c]), lambda g, x=x: int(X.act[g][x])) for x in range(X.sizes[c])], dtype=IDX)
            for c in self.model.base.objects
        ]
        return NatTrans(X, self.presheaf, comps)

    def undef(self, witness: ConnectedWitness | None = None) -> NatTrans:
        E = self.elements
        bottoms = self.model.lattice.bottoms
        comps = []
        for c in self.model.base.objects:
            obj = E.obj_index(c, int(bottoms[c]))
            if self.power.sizes[obj] != 1:
                raise NotConnected("sections over IsT(0) are not unique")
            comps.append([self.presheaf.element(c, int(bottoms[c]), 0)])
        return NatTrans(self.model.one, self.presheaf, comps)

    def glue(self) -> NatTrans:
        X = self.X
        IX = fc.product(self.model.J, X)
        comps = []
        for c in self.model.base.objects:
            arr = np.zeros(IX.sizes[c], IDX)
            for k in range(IX.sizes[c]):
                i, x = IX.split(c, k)
                arr[k] = self.encode(c, i, lambda g, x=x: int(X.act[g][x]))
            comps.append(arr)
        return NatTrans(IX, self.presheaf, comps)

    def classify(self, Y: Presheaf, phi: NatTrans, partial: Callable[[int, int], int], check_unique: bool = True) -> NatTrans:
        """The map ``Y -> Lift(X)`` classifying ``(phi, partial)``.

        ``partial(c, y)`` is defined where ``phi`` is true.
        """
        cat = self.model.base
        comps = []
        for c in cat.objects:
            arr = np.zeros(Y.sizes[c], IDX)
            for y in range(Y.sizes[c]):
                i = int(phi.comps[c][y])
                arr[y] = self.encode(c, i, lambda g, y=y: partial(int(cat.src[g]), int(Y.act[g][y])))
            comps.append(arr)
        h = NatTrans(Y, self.presheaf, comps)
        if check_unique:
            self._check_unique(Y, phi, partial, h)
        return h

    def _check_unique(self, Y, phi, partial, h) -> None:
        L = self.presheaf
        tops = self.model.lattice.tops
        maxd = int(L.sizes.max()) if L.total else 1
        allowed = np.zeros((Y.total, maxd), dtype=bool)
        offs = Y.offsets
        eta = self.eta
        for c in self.model.base.objects:
            for y in range(Y.sizes[c]):
                i = int(phi.comps[c][y])
                ok = self.proj_map.comps[c] == i
                if i == tops[c]:
                    ok = np.zeros_like(ok)
                    ok[eta.comps[c][partial(c, y)]] = True
                allowed[offs[c] + y, : len(ok)] = ok
        rows = fc.homs(Y, L, allowed=allowed)
        if len(rows) != 1 or not np.array_equal(rows[0], h.row()):
            raise NotUniversal(f"classifying map is not unique ({len(rows)} candidates)")


class CylinderObj:
    """Open mapping cylinder: pushout of ``B <- E -> I x E`` along ``e -> (0, e)``."""

    def __init__(self, model: Model, f: NatTrans):
        self.model = model
        self.f = f
        E = f.source
        self.IE = IE = fc.product(model.J, E)
        zero = fc.to_terminal(E, model.one).then(model.bottom_point)
        self.zero_in = IE.tuple_map([zero, E.identity()])
        self.pushout = fc.pushout(f, self.zero_in)
        self.presheaf = self.pushout

    def fibrewise_comparison(self) -> tuple[bool, NatTrans]:
        """Compare with ``Sum_b (fib_f b)_bot``."""
        M = self.model.over(self.f.target)
        El = M.elements
        G = fc.fibers(self.f, El)
        sc = M.scone(G)
        tot = fc.total(sc.presheaf, El)
        B = self.f.target
        members = []
        for c in self.model.base.objects:
            order = np.argsort(self.f.comps[c], kind="stable")
            counts = np.bincount(self.f.comps[c], minlength=B.sizes[c]) if B.sizes[c] else np.zeros(0, IDX)
            starts = np.concatenate([[0], np.cumsum(counts)]).astype(IDX)
            members.append([order[starts[b] : starts[b + 1]] for b in range(B.sizes[c])])
        comps = []
        for c in self.model.base.objects:
            arr = np.zeros(tot.sizes[c], IDX)
            for k in range(tot.sizes[c]):
                b, e = tot.component(c, k)
                obj = El.obj_index(c, b)
                side, r = sc.pushout.representative(obj, e)
                if side == "L":
                    arr[k] = self.pushout.inl.comps[c][b]
                else:
                    j, pos = sc.IX.split(obj, r)
                    x = int(members[c][b][pos])
                    arr[k] = self.pushout.inr.comps[c][self.IE.pair(c, j, x)]
            comps.append(arr)
        cmp = NatTrans(tot, self.presheaf, comps)
        return fc.is_iso(cmp)[0], cmp
