"""Decision procedures: lattice conditions, properness and orthogonality."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from . import fincat as fc
from .budget import get_budget
from .errors import BudgetExceeded, ClauseDisagreement, NotAPullback, NotConnected
from .fincat import NatTrans, Presheaf, Subobject
from .geom import Model, SliceModel, renumbering
from .kripke import Evaluator, force, parse, show, verify_witness
from .kripke import syntax as S
from .latdual import free_algebra, is_quasi_coherent


@lru_cache(maxsize=None)
def catalogue() -> dict[str, str]:
    """Named internal conditions, as surface-syntax formulas."""
    text = resources.files("finsynth").joinpath("data/conditions.json").read_text()
    return json.loads(text)


@dataclass
class ConditionReport:
    name: str
    holds: bool
    formula: str = ""
    witness: dict | None = None
    detail: dict = field(default_factory=dict)
    _witness: object = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        out = {"name": self.name, "holds": bool(self.holds)}
        if self.formula:
            out["formula"] = self.formula
        if self.witness is not None:
            out["witness"] = self.witness
        if self.detail:
            out["detail"] = self.detail
        return out


def check_formula(m: Model, name: str, phi, interp=None) -> ConditionReport:
    """Force a closed formula and package the verdict."""
    interp = interp or m.interp
    phi = parse(phi) if isinstance(phi, str) else phi
    v = force(interp, (), phi)
    rep = ConditionReport(name, v.is_global, show(phi))
    if v.witness is not None:
        if not verify_witness(interp, v.witness):
            raise ClauseDisagreement(f"{name}: witness does not re-verify")
        rep.witness = v.witness.to_json()
        rep._witness = v.witness
    return rep


def check_condition(m: Model, name: str) -> ConditionReport:
    return check_formula(m, name, catalogue()[name])


def check_strict(m: Model) -> ConditionReport:
    return check_condition(m, "strict")


def check_disjunctive(m: Model) -> ConditionReport:
    return check_condition(m, "disjunctive")


def check_conjunctive(m: Model) -> ConditionReport:
    return check_condition(m, "conjunctive")


def check_conservative(m: Model) -> ConditionReport:
    return check_condition(m, "conservative")


def check_local(m: Model) -> ConditionReport:
    """Forced directly, then compared with strict and disjunctive."""
    rep = check_condition(m, "local")
    parts = check_strict(m).holds and check_disjunctive(m).holds
    if rep.holds != parts:
        raise ClauseDisagreement("local differs from strict and disjunctive")
    return rep


def check_phoa(m: Model) -> ConditionReport:
    """Every endomap of the interval is affine.

    On the terminal base the verdict is compared with quasi-coherence of the
    free algebra on one generator.
    """
    rep = check_condition(m, "phoa")
    if m.base.n_objects == 1:
        qc = is_quasi_coherent(free_algebra(m.lattice.stages[0], 1))
        rep.detail["free_algebra_quasi_coherent"] = bool(qc)
        if qc != rep.holds:
            raise ClauseDisagreement("affine endomaps and quasi-coherence of J[x] disagree")
    return rep


def check_quotient_initial(m: Model) -> ConditionReport:
    return check_condition(m, "quotient_initial")


def check_quotient_initial_core(m: Model) -> ConditionReport:
    """Every global point of the interval is the global 0 or the global 1."""
    pts = m.global_points
    ends = {tuple(m.lattice.bottoms.tolist()), tuple(m.lattice.tops.tolist())}
    rep = ConditionReport("quotient_initial_core", True, detail={"global_points": len(pts)})
    for row in pts:
        if tuple(row.tolist()) not in ends:
            rep.holds = False
            rep.witness = {"point": [m.J.label(c, int(v)) for c, v in enumerate(row)]}
            break
    return rep


def defined_true(m: Model) -> Subobject:
    """Elements ``(i, theta)`` of ``Lift(J)`` with ``i = 1`` and ``theta = 1``."""
    L = m.lift(m.J)
    tops = m.lattice.tops
    masks = []
    for c in m.base.objects:
        mk = np.zeros(L.presheaf.sizes[c], dtype=bool)
        for k in range(L.presheaf.sizes[c]):
            if L.proj(c, k) == tops[c]:
                mk[k] = L.section(c, k)[int(m.base.identity[c])] == tops[c]
        masks.append(mk)
    return Subobject(L.presheaf, masks)


def check_dominant(m: Model) -> ConditionReport:
    """Conservativity plus closure of opens under dependent sums."""
    cons = check_conservative(m)
    interp = m.interp
    closure_interp = type(interp)(
        m.lattice,
        dict(interp.types),
        dict(interp.functions),
        {**interp.predicates, "DefT": defined_true(m)},
        dict(interp.type_constructors),
    )
    clo = check_formula(m, "dominance_closure", catalogue()["dominance_closure"], closure_interp)
    rep = ConditionReport("dominant", cons.holds and clo.holds, f"conservative /\\ {clo.formula}")
    rep.detail = {"conservative": cons.holds, "sum_closed": clo.holds}
    bad = cons if not cons.holds else clo if not clo.holds else None
    if bad is not None:
        rep.witness, rep._witness = bad.witness, bad._witness
    return rep


def check_closed_proper(m: Model, X: Presheaf) -> ConditionReport:
    """Dual Frobenius law for closed predicates, quantified over ``I^X``."""
    interp = m.interpretation(X=X)
    return check_formula(m, "closed_proper", catalogue()["closed_proper"], interp)


def check_custom(m: Model, text: str, **types: Presheaf) -> ConditionReport:
    return check_formula(m, "formula", text, m.interpretation(**types))


def quotient_initial_degeneracy(m: Model) -> ConditionReport:
    """If the interval is strict and quotient-initial it has exactly two global points."""
    qi = check_quotient_initial(m).holds
    st = check_strict(m).holds
    n = len(m.global_points)
    rep = ConditionReport("qi_strict_two_points", (not (qi and st)) or n == 2)
    rep.detail = {"quotient_initial": qi, "strict": st, "global_points": n}
    return rep


CONDITIONS = {
    "strict": check_strict,
    "disjunctive": check_disjunctive,
    "local": check_local,
    "conjunctive": check_conjunctive,
    "conservative": check_conservative,
    "phoa": check_phoa,
    "quotient_initial": check_quotient_initial,
    "quotient_initial_core": check_quotient_initial_core,
    "dominant": check_dominant,
    "qi_strict_two_points": quotient_initial_degeneracy,
}


# ---------------------------------------------------------------------------
# Orthogonality
# ---------------------------------------------------------------------------


@dataclass
class MapClass:
    """A single map, or a family of maps over the generic point of ``I``.

    For a family, ``model`` is the model over the elements of ``I`` and
    ``members`` live in its base.
    """

    name: str
    members: list[NatTrans]
    model: Model | None = None
    indexed: bool = False

    def __post_init__(self):
        for f in self.members:
            f.validate()


def _exists_unique_formula(A: Presheaf, B: Presheaf):
    """Precomposition ``C^B -> C^A`` is surjective and injective, internally."""
    a = S.Name("a")
    surj = S.Forall(
        "h", S.TypeName("CA"),
        S.Exists("k", S.TypeName("CB"), S.Forall("a", S.TypeName("A"), S.Eq(S.App("ev", (S.Name("k"), S.App("f", (a,)))), S.App("ev", (S.Name("h"), a))))),
    )
    inj = S.Forall(
        "k1", S.TypeName("CB"),
        S.Forall(
            "k2", S.TypeName("CB"),
            S.Implies(
                S.Forall("a", S.TypeName("A"), S.Eq(S.App("ev", (S.Name("k1"), S.App("f", (a,)))), S.App("ev", (S.Name("k2"), S.App("f", (a,)))))),
                S.Eq(S.Name("k1"), S.Name("k2")),
            ),
        ),
    )
    return S.And(surj, inj)


@dataclass
class OrthogonalityVerdict:
    holds: bool
    cross_checked: bool
    sizes: dict

    def __bool__(self) -> bool:
        return self.holds


def is_orthogonal(C: Presheaf, f: NatTrans, model: Model | None = None, cross_check: bool = True) -> OrthogonalityVerdict:
    """``C^B -> C^A`` (precomposition with ``f: A -> B``) is an isomorphism.

    With a model on the same base, the internal statement "precomposition is
    bijective" is also forced and must agree.
    """
    A, B = f.source, f.target
    EB = fc.exponential(B, C)
    EA = fc.exponential(A, C)
    pre = fc.precomposition(EB, EA, f)
    verdict = fc.is_iso(pre)[0]
    sizes = {"C^B": int(EB.total), "C^A": int(EA.total)}
    checked = False
    if cross_check and model is not None and model.base == C.cat:
        work = int((EB.sizes * EB.sizes * max(int(A.sizes.max()) if A.total else 1, 1)).max(initial=0))
        work = max(work, int((EA.sizes * EB.sizes * max(int(A.sizes.max()) if A.total else 1, 1)).max(initial=0)))
        if work <= get_budget():
            interp = model.interp.with_types(A=A, B=B, CA=EA, CB=EB)
            interp.functions = {**interp.functions, "f": f}
            internal = force(interp, (), _exists_unique_formula(A, B), Evaluator(interp)).is_global
            if internal != verdict:
                raise ClauseDisagreement("external and internal orthogonality disagree")
            checked = True
    return OrthogonalityVerdict(verdict, checked, sizes)


def is_orthogonal_to_family(C: Presheaf, fam: MapClass) -> OrthogonalityVerdict:
    """Orthogonality of the constant family ``C`` to every member, in the slice."""
    M = fam.model
    assert isinstance(M, SliceModel)
    Cs = M.pull(C)
    holds, checked, sizes = True, True, {}
    for f in fam.members:
        v = is_orthogonal(Cs, f, M)
        holds &= v.holds
        checked &= v.cross_checked
        for k, n in v.sizes.items():
            sizes[k] = sizes.get(k, 0) + n
    return OrthogonalityVerdict(holds, checked, sizes)


def segal_class(m: Model) -> MapClass:
    return MapClass("Segal", [m.horn_sub.inclusion])


def based_segal_class(m: Model) -> MapClass:
    """``IsT(i)_bot -> I/i`` over the generic ``i``."""
    M = m.over_interval
    sc = M.scone(M.generic_true)
    below = Subobject(M.J, [M.lattice.stages[k].leq_matrix[:, M.generic_values[k]] for k in M.base.objects])
    ren = renumbering(below)
    comps = [ren[k][sc.proj_map.comps[k]] for k in M.base.objects]
    return MapClass("basedSegal", [NatTrans(sc.presheaf, below.presheaf(), comps)], M, True)


def little_sierp_class(m: Model) -> MapClass:
    """``sigma`` of ``IsT(i)`` over the generic ``i``."""
    M = m.over_interval
    return MapClass("littleSierp", [M.sigma(M.generic_true)], M, True)


def sierp_member(m: Model, X: Presheaf) -> NatTrans:
    return m.sigma(X)


@dataclass
class SuiteResult:
    segal: bool
    based_segal: bool
    little_sierp: bool | None
    sierp: bool | None
    spot_checks: dict
    sizes: dict

    def to_json(self) -> dict:
        return {
            "segal": self.segal,
            "basedSegal": self.based_segal,
            "littleSierp": self.little_sierp,
            "sierp": self.sierp,
            "sierp_basis": "littleSierp plus sigma_X spot checks",
            "spot_checks": self.spot_checks,
        }


def completeness_suite(C: Presheaf, m: Model, samples: dict[str, Presheaf] | None = None) -> SuiteResult:
    seg = is_orthogonal(C, m.horn_sub.inclusion, m)
    based = is_orthogonal_to_family(C, based_segal_class(m))
    try:
        little = is_orthogonal_to_family(C, little_sierp_class(m)).holds
    except NotConnected:
        little = None
    spots = {}
    for name, X in sorted((samples or {}).items()):
        try:
            spots[name] = is_orthogonal(C, m.sigma(X), m).holds
        except NotConnected:
            spots[name] = None
    decided = [v for v in spots.values() if v is not None]
    if little and not all(decided):
        raise ClauseDisagreement("little-Sierpinski verdict contradicts a sigma_X spot check")
    sierp = little if little is None else little and all(decided)
    return SuiteResult(seg.holds, based.holds, little, sierp, spots, {"C^Delta2": seg.sizes["C^B"]})


# ---------------------------------------------------------------------------
# Pullback locality
# ---------------------------------------------------------------------------


@dataclass
class Square:
    """``top: P -> A``, ``left: P -> Q``, ``right: A -> B``, ``bottom: Q -> B``."""

    top: NatTrans
    left: NatTrans
    right: NatTrans
    bottom: NatTrans

    def validate(self) -> "Square":
        if not self.top.then(self.right).same(self.left.then(self.bottom)):
            raise NotAPullback(self)
        pb = fc.pullback(self.right, self.bottom)
        cmp = pb.mediate(self.top, self.left)
        if not fc.is_iso(cmp)[0]:
            raise NotAPullback(self)
        return self

    @classmethod
    def along(cls, member: NatTrans, g: NatTrans) -> "Square":
        pb = fc.pullback(member, g)
        return cls(pb.p1, pb.p2, member, g)


def check_pullback_locality(C: Presheaf, f: NatTrans, L: MapClass, squares: list[Square], model: Model | None = None) -> dict:
    """Orthogonality of ``C`` to the pulled-back member of each square."""
    results = []
    members = {id(x) for x in L.members}
    for sq in squares:
        sq.validate()
        if members and id(sq.right) not in members:
            raise NotAPullback(sq)
        results.append(is_orthogonal(C, sq.left, model).holds)
    return {"holds": all(results), "per_square": results, "map": repr(f)}


def budget_guard(fn, *args, **kw):
    """Run a check, turning a budget overrun into a verdict record."""
    try:
        return fn(*args, **kw)
    except BudgetExceeded as exc:
        return exc
