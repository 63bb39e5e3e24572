"""Extending maps out of ``X_bot`` along ``sigma_X: X_bot -> Lift(X)``.

A map ``X_bot -> C`` is the same as a cone datum: a point ``bottom`` of ``C``
and a cylinder ``I x X -> C`` sending ``(0, x)`` to ``bottom``.  When ``C`` is
orthogonal to every ``sigma`` of a proposition ``IsT(i)``, every cone datum
extends uniquely to ``Lift(X)``.  The extension is computed one element
``u`` of ``Lift(X)`` at a time: pull the datum back along the evaluation
``Sum_u IsT(pi u)_bot -> X_bot``, extend it over the slice of the base at
the stage of ``u`` and read the result off at the generic point.

Everything here is at the level of sets, so the coherence homotopy of an
extension is an equation and is checked as one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import fincat as fc
from .errors import ExtensionNotUnique, NaturalityFailure, NotLittleComplete
from .fincat import IDX, NatTrans, Presheaf
from .geom import ConnectedWitness, Model


@dataclass
class ConeDatum:
    """``bottom``: point of ``C``; ``cylinder``: ``I x X -> C``."""

    bottom: NatTrans
    cylinder: NatTrans

    def check(self, scone) -> "ConeDatum":
        left = scone.zero_in.then(self.cylinder)
        right = fc.to_terminal(scone.X, self.bottom.source).then(self.bottom)
        if not left.same(right):
            raise NaturalityFailure(None, "cylinder does not start at the bottom point")
        return self

    def key(self) -> tuple:
        return tuple(self.bottom.row().tolist()), tuple(self.cylinder.row().tolist())


@dataclass
class Extension:
    datum: ConeDatum
    extension: NatTrans
    agrees: bool


class Extender:
    """Cone data, evaluation maps and extensions for a fixed ``X``."""

    def __init__(self, model: Model, X: Presheaf, witness: ConnectedWitness | None = None):
        self.model = model
        self.X = X
        self.witness = witness or model.connected_witness(X)
        self.scone = model.scone(X)
        self.lift = model.lift(X)
        self.sigma = model.sigma(X, self.witness)
        self._memo: dict = {}
        self.memo_hits = 0

    # -- cone data -----------------------------------------------------------
    def datum_of_map(self, g: NatTrans) -> ConeDatum:
        """Evaluate a map ``X_bot -> C`` on the bottom and the cylinder."""
        return ConeDatum(self.scone.bottom.then(g), self.scone.gamma.then(g))

    def map_of_datum(self, d: ConeDatum) -> NatTrans:
        d.check(self.scone)
        return self.scone.pushout.mediate(d.bottom, d.cylinder)

    def cone_data(self, C: Presheaf) -> list[ConeDatum]:
        """All cone data into ``C``, paired up with ``Nat(X_bot, C)``."""
        one = self.model.one
        IX = self.scone.IX
        pts = fc.homs(one, C)
        cyl = fc.homs(IX, C)
        zero_cols = np.concatenate(
            [IX.offsets[c] + self.scone.zero_in.comps[c] for c in self.model.base.objects] + [np.zeros(0, IDX)]
        ).astype(IDX)
        stage_of = np.repeat(np.arange(self.model.base.n_objects), self.X.sizes)
        data = []
        for p in pts:
            want = p[stage_of]
            ok = (cyl[:, zero_cols] == want[None, :]).all(axis=1) if len(zero_cols) else np.ones(len(cyl), bool)
            for r in cyl[ok]:
                data.append(ConeDatum(NatTrans.from_row(one, C, p), NatTrans.from_row(IX, C, r)))
        maps = fc.nat_list(self.scone.presheaf, C)
        if len(maps) != len(data):
            raise NaturalityFailure(None, f"{len(data)} cone data but {len(maps)} maps out of the cone")
        seen = {self.datum_of_map(g).key() for g in maps}
        if seen != {d.key() for d in data}:
            raise NaturalityFailure(None, "cone data and maps out of the cone do not correspond")
        return data

    def restrict(self, f: NatTrans) -> ConeDatum:
        """Cone datum of ``f . sigma_X`` for ``f: Lift(X) -> C``."""
        d = ConeDatum(self.lift.undef(self.witness).then(f), self.lift.glue().then(f))
        return d.check(self.scone)

    # -- relative objects over Lift(X) ----------------------------------------
    @cached_property
    def over_lift(self):
        return self.model.over(self.lift.presheaf)

    @cached_property
    def pi_values(self) -> np.ndarray:
        E = self.over_lift.elements
        return np.array([self.lift.proj(int(c), int(u)) for c, u in zip(E.proj_obj, E.elem)], dtype=IDX)

    @cached_property
    def prop(self) -> Presheaf:
        """``u -> IsT(pi u)`` over the elements of ``Lift(X)``."""
        return self.over_lift.is_t(self.pi_values)

    @cached_property
    def little_scone(self):
        return self.over_lift.scone(self.prop)

    @cached_property
    def little_lift(self):
        return self.over_lift.lift(self.prop)

    @cached_property
    def cylinder(self) -> fc.TotalPresheaf:
        """``Sum_u IsT(pi u)_bot``."""
        return fc.total(self.little_scone.presheaf, self.over_lift.elements)

    @cached_property
    def relative_lift(self) -> fc.TotalPresheaf:
        """``Sum_u Lift(IsT(pi u))``."""
        return fc.total(self.little_lift.presheaf, self.over_lift.elements)

    @cached_property
    def relative_sigma(self) -> NatTrans:
        M = self.over_lift
        sig = M.sigma(self.prop)
        return fc.total_map(sig, self.cylinder, self.relative_lift)

    def _point(self, c: int, u: int) -> int:
        """``x(p)``: the value of ``u`` at the identity, where defined."""
        return self.lift.section(c, u)[int(self.model.base.identity[c])]

    @cached_property
    def eval_cone(self) -> NatTrans:
        """``Sum_u IsT(pi u)_bot -> X_bot``: bottom to bottom, ``(j, p)`` to ``(j, u(p))``."""
        T, E, S = self.cylinder, self.over_lift.elements, self.little_scone
        scX = self.scone
        comps = []
        for c in self.model.base.objects:
            arr = np.zeros(T.sizes[c], IDX)
            for k in range(T.sizes[c]):
                u, e = T.component(c, k)
                side, r = S.pushout.representative(E.obj_index(c, u), e)
                if side == "L":
                    arr[k] = scX.bottom.comps[c][0]
                else:
                    j, _ = S.IX.split(E.obj_index(c, u), r)
                    arr[k] = scX.gamma.comps[c][scX.IX.pair(c, j, self._point(c, u))]
            comps.append(arr)
        return NatTrans(T, scX.presheaf, comps)

    @cached_property
    def eval_lift(self) -> NatTrans:
        """``Sum_u Lift(IsT(pi u)) -> Lift(X)``: ``(u, (j, s))`` to ``(j, u . s)``."""
        T, LX = self.relative_lift, self.lift
        comps = []
        for c in self.model.base.objects:
            arr = np.zeros(T.sizes[c], IDX)
            for k in range(T.sizes[c]):
                u, v = T.component(c, k)
                j, _ = self.little_lift.split(self.over_lift.elements.obj_index(c, u), v)
                sec = LX.section(c, u)
                arr[k] = LX.encode(c, j, lambda g: sec[g])
            comps.append(arr)
        return NatTrans(T, LX.presheaf, comps)

    def generic_point(self, c: int, u: int) -> int:
        """``gen_{pi u} = (pi u, identity)`` in ``Lift(IsT(pi u))`` at ``(c, u)``."""
        E = self.over_lift.elements
        obj = E.obj_index(c, u)
        return self.little_lift.encode(obj, int(self.pi_values[obj]), lambda g: 0)

    @cached_property
    def diagonal(self) -> NatTrans:
        """``u -> (u, gen_{pi u})``."""
        LX, T = self.lift.presheaf, self.relative_lift
        comps = [
            np.array([T.element(c, u, self.generic_point(c, u)) for u in range(LX.sizes[c])], dtype=IDX)
            for c in self.model.base.objects
        ]
        return NatTrans(LX, T, comps)

    def check_section(self) -> bool:
        """The evaluation undoes the diagonal."""
        return self.diagonal.then(self.eval_lift).same(self.lift.presheaf.identity())

    def check_eval_square(self) -> bool:
        left = self.eval_cone.then(self.sigma)
        right = self.relative_sigma.then(self.eval_lift)
        return left.same(right)

    # -- extension ------------------------------------------------------------
    def _slice_problem(self, c: int):
        """Model over the slice of the base at ``c``, with the map into the elements of ``Lift(X)``."""
        cache = self.__dict__.setdefault("_slices", {})
        if c not in cache:
            yc = fc.representable(self.model.base, c)
            cache[c] = (self.model.over(yc), yc)
        return cache[c][0]

    def _little_extension(self, c: int, u: int, F: NatTrans, C: Presheaf) -> int:
        """Value at ``u`` of the unique extension of ``F . eval_cone`` restricted to ``u``."""
        Mu = self._slice_problem(c)
        Eu = Mu.elements
        El = self.over_lift.elements
        cat = self.model.base
        LX = self.lift.presheaf
        # objects (d, g: d -> c) of the slice sit over (d, u.g) in the elements of Lift(X)
        over = [El.obj_index(int(Eu.proj_obj[k]), int(LX.act[int(cat.hom(int(Eu.proj_obj[k]), c)[Eu.elem[k]])][u])) for k in Eu.objects]
        vals = self.pi_values[over]
        P = Mu.is_t(vals)
        datum = np.concatenate([F.comps[int(Eu.proj_obj[k])][self.cylinder.fiber_offsets[int(Eu.proj_obj[k])][El.elem[over[k]]] + np.arange(self.little_scone.presheaf.sizes[over[k]])] for k in Eu.objects]).astype(IDX)
        key = (c, tuple(vals.tolist()), tuple(datum.tolist()), id(C))
        hit = self._memo.get(key)
        if hit is not None:
            self.memo_hits += 1
            return hit
        sc = Mu.scone(P)
        Lu = Mu.lift(P)
        sig = Mu.sigma(P)
        Cu = Mu.pull(C)
        L = Lu.presheaf
        maxd = max(int(Cu.sizes.max()) if Cu.total else 1, 1)
        allowed = np.ones((L.total, maxd), dtype=bool)
        pos = 0
        for k in Eu.objects:
            n = int(sc.presheaf.sizes[k])
            for e in range(n):
                row = allowed[L.offsets[k] + sig.comps[k][e]]
                v = datum[pos + e]
                fixed = np.zeros(maxd, bool)
                fixed[v] = True
                row &= fixed
            pos += n
        rows = fc.homs(L, Cu, allowed=allowed)
        # re-check the restriction independently of the mask
        good = [r for r in rows if np.array_equal(np.concatenate([r[L.offsets[k] + sig.comps[k]] for k in Eu.objects]), datum)]
        if not good:
            raise NotLittleComplete(f"no little extension at stage {cat.obj_names[c]}", {"u": int(u), "i": int(self.pi_values[El.obj_index(c, u)])})
        if len(good) > 1:
            raise ExtensionNotUnique(f"{len(good)} little extensions at stage {cat.obj_names[c]}")
        k_id = Eu.obj_index(c, int(cat.hom_position[cat.identity[c]]))
        gen = Lu.encode(k_id, int(vals[k_id]), lambda g: 0)
        out = int(good[0][L.offsets[k_id] + gen])
        self._memo[key] = out
        return out

    def extend(self, datum: ConeDatum, C: Presheaf) -> Extension:
        g = self.map_of_datum(datum)
        F = self.eval_cone.then(g)
        LX = self.lift.presheaf
        comps = [
            np.array([self._little_extension(c, u, F, C) for u in range(LX.sizes[c])], dtype=IDX)
            for c in self.model.base.objects
        ]
        fhat = NatTrans(LX, C, comps)
        back = self.restrict(fhat)
        agrees = back.bottom.same(datum.bottom) and back.cylinder.same(datum.cylinder)
        if not agrees:
            raise NotLittleComplete("extension does not restrict to the datum", {})
        return Extension(datum, fhat, agrees)

    # -- retraction -------------------------------------------------------------
    def retraction(self, g: NatTrans, C: Presheaf) -> NatTrans:
        """``H(g) = k . diagonal`` with ``k`` the unique map satisfying ``k . relative_sigma = g . eval_cone``."""
        target = self.eval_cone.then(g)
        M = self.over_lift
        El = M.elements
        sig = M.sigma(self.prop)
        Lp = self.little_lift.presheaf
        Cp = M.pull(C)
        maxd = max(int(Cp.sizes.max()) if Cp.total else 1, 1)
        allowed = np.ones((Lp.total, maxd), dtype=bool)
        for k in El.objects:
            c, u = int(El.proj_obj[k]), int(El.elem[k])
            base = self.cylinder.fiber_offsets[c][u]
            for e in range(self.little_scone.presheaf.sizes[k]):
                v = int(target.comps[c][base + e])
                mask = np.zeros(maxd, bool)
                mask[v] = True
                allowed[Lp.offsets[k] + sig.comps[k][e]] &= mask
        rows = fc.homs(Lp, Cp, allowed=allowed)
        if len(rows) == 0:
            raise NotLittleComplete("relative sigma restriction is not surjective", {})
        if len(rows) > 1:
            raise ExtensionNotUnique("relative sigma restriction is not injective")
        k_fam = NatTrans.from_row(Lp, Cp, rows[0])
        k_tot = NatTrans(
            self.relative_lift,
            C,
            [
                np.concatenate([k_fam.comps[El.obj_index(c, u)] for u in range(self.lift.presheaf.sizes[c])] + [np.zeros(0, IDX)]).astype(IDX)
                for c in self.model.base.objects
            ],
        )
        if not self.relative_sigma.then(k_tot).same(target):
            raise NotLittleComplete("relative extension does not restrict correctly", {})
        return self.diagonal.then(k_tot)


def cone_data(m: Model, C: Presheaf, X: Presheaf) -> list[ConeDatum]:
    return Extender(m, X).cone_data(C)


def restrict_datum(ext: Extender, f: NatTrans) -> ConeDatum:
    return ext.restrict(f)


def build_extension(ext: Extender, C: Presheaf, datum: ConeDatum) -> Extension:
    return ext.extend(datum, C)


def build_retraction(ext: Extender, C: Presheaf) -> dict[tuple, NatTrans]:
    """``H`` on every map ``X_bot -> C``, checked to satisfy ``H(f . sigma) = f``."""
    H = {}
    for g in fc.nat_list(ext.scone.presheaf, C):
        H[tuple(g.row().tolist())] = ext.retraction(g, C)
    for f in fc.nat_list(ext.lift.presheaf, C):
        back = H[tuple(ext.sigma.then(f).row().tolist())]
        if not back.same(f):
            raise ExtensionNotUnique("retraction equation fails")
    return H


@dataclass
class SierpReport:
    samples: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(v["bijective"] and v["agrees_with_orthogonality"] for v in self.samples.values())


def verify_sierp_equivalence(m: Model, C: Presheaf, samples: dict[str, Presheaf]) -> SierpReport:
    """For each sample ``X``: extension gives a section and ``H`` a retraction of ``C^sigma``."""
    from .complete import is_orthogonal

    rep = SierpReport()
    for name, X in sorted(samples.items()):
        ext = Extender(m, X)
        data = ext.cone_data(C)
        lifted = [ext.extend(d, C) for d in data]
        H = build_retraction(ext, C)
        section_ok = all(ext.restrict(e.extension).key() == e.datum.key() for e in lifted)
        matches_h = all(H[tuple(ext.map_of_datum(e.datum).row().tolist())].same(e.extension) for e in lifted)
        n_lift = len(fc.homs(ext.lift.presheaf, C))
        bijective = section_ok and matches_h and n_lift == len(data)
        orth = is_orthogonal(C, ext.sigma, m).holds
        rep.samples[name] = {
            "data": len(data),
            "bijective": bool(bijective),
            "agrees_with_orthogonality": bool(orth == bijective),
            "memo_hits": ext.memo_hits,
        }
    return rep
