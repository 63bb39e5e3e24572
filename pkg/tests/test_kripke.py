import random
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsynth import fincat as fc
from finsynth.errors import IllTyped, ParseError
from finsynth.geom import Model
from finsynth.kripke import Interpretation, force, holds_globally, parse, show, verify_witness
from finsynth.kripke import syntax as S
from finsynth.latdual import FinDistLattice

LATTICES = {"2": FinDistLattice.chain(2), "3": FinDistLattice.chain(3), "diamond": FinDistLattice.diamond()}
VARS = "xyzuvw"


# -- a classical evaluator over a single finite lattice ------------------------


def classical_term(t, env, L):
    if isinstance(t, S.Name):
        if t.name in env:
            return env[t.name]
        return {"0": L.bottom, "1": L.top}[t.name]
    a, b = (classical_term(x, env, L) for x in t.args)
    if t.fn == "meet":
        return int(L.meet[a, b])
    if t.fn == "join":
        return int(L.join[a, b])
    assert t.fn == "ev"
    return a[b]


def classical(f, env, L, domains):
    if isinstance(f, S.Top):
        return True
    if isinstance(f, S.Bot):
        return False
    if isinstance(f, S.Eq):
        return classical_term(f.left, env, L) == classical_term(f.right, env, L)
    if isinstance(f, S.Mem):
        v = classical_term(f.args[0], env, L)
        return v == (L.top if f.pred == "IsT" else L.bottom)
    if isinstance(f, S.Not):
        return not classical(f.body, env, L, domains)
    if isinstance(f, S.And):
        return classical(f.left, env, L, domains) and classical(f.right, env, L, domains)
    if isinstance(f, S.Or):
        return classical(f.left, env, L, domains) or classical(f.right, env, L, domains)
    if isinstance(f, S.Implies):
        return (not classical(f.left, env, L, domains)) or classical(f.right, env, L, domains)
    if isinstance(f, S.Iff):
        return classical(f.left, env, L, domains) == classical(f.right, env, L, domains)
    dom = domains[f.type]
    results = (classical(f.body, {**env, f.var: v}, L, domains) for v in dom)
    return all(results) if isinstance(f, S.Forall) else any(results)


# -- random formulas ---------------------------------------------------------

J_T = S.TypeName("J")
JJ_T = S.TypeExp(J_T, J_T)


def random_term(rng, scope, depth):
    points = [v for v, ty in scope if ty == J_T]
    funcs = [v for v, ty in scope if ty == JJ_T]
    options = ["const"] + (["var"] * 3 if points else [])
    if depth > 0:
        options += ["meet", "join"] + (["ev"] if funcs else [])
    kind = rng.choice(options)
    if kind == "const":
        return S.Name(rng.choice("01"))
    if kind == "var":
        return S.Name(rng.choice(points))
    if kind == "ev":
        return S.App("ev", (S.Name(rng.choice(funcs)), random_term(rng, scope, depth - 1)))
    return S.App(kind, (random_term(rng, scope, depth - 1), random_term(rng, scope, depth - 1)))


def random_formula(rng, scope, depth, allow_fun):
    if depth == 0 or rng.random() < 0.2:
        kind = rng.choice(["eq", "eq", "IsT", "IsF", "top", "bot"])
        if kind == "top":
            return S.Top()
        if kind == "bot":
            return S.Bot()
        if kind == "eq":
            return S.Eq(random_term(rng, scope, 2), random_term(rng, scope, 2))
        return S.Mem(kind, (random_term(rng, scope, 2),))
    kind = rng.choice(["and", "or", "imp", "iff", "not", "forall", "exists", "forall", "exists"])
    if kind == "not":
        return S.Not(random_formula(rng, scope, depth - 1, allow_fun))
    if kind in ("forall", "exists"):
        var = VARS[len(scope)] if len(scope) < len(VARS) else rng.choice(VARS)
        ty = JJ_T if allow_fun and rng.random() < 0.15 else J_T
        body = random_formula(rng, scope + [(var, ty)], depth - 1, allow_fun)
        return (S.Forall if kind == "forall" else S.Exists)(var, ty, body)
    cls = {"and": S.And, "or": S.Or, "imp": S.Implies, "iff": S.Iff}[kind]
    return cls(random_formula(rng, scope, depth - 1, allow_fun), random_formula(rng, scope, depth - 1, allow_fun))


def _depth(f):
    if isinstance(f, (S.Not,)):
        return 1 + _depth(f.body)
    if isinstance(f, (S.Forall, S.Exists)):
        return 1 + _depth(f.body)
    if isinstance(f, (S.And, S.Or, S.Implies, S.Iff)):
        return 1 + max(_depth(f.left), _depth(f.right))
    return 0


def test_fuzzed_formulas_agree_with_classical_evaluation():
    rng = random.Random(20240611)
    checked = 0
    for name, L in LATTICES.items():
        model = Model.set_model(L, name)
        interp = model.interp
        domains = {J_T: list(range(L.n)), JJ_T: list(product(range(L.n), repeat=L.n))}
        for _ in range(400):
            phi = random_formula(rng, [], 5, allow_fun=L.n <= 3)
            assert _depth(phi) <= 5
            verdict = force(interp, (), phi)
            assert verdict.is_global == classical(phi, {}, L, domains), show(phi)
            if not verdict.is_global:
                assert verify_witness(interp, verdict.witness)
            checked += 1
            # open formulas in one free variable, pointwise
            psi = random_formula(rng, [("x", J_T)], 4, allow_fun=False)
            truth = force(interp, (("x", model.J),), psi).truth
            expect = [classical(psi, {"x": v}, L, domains) for v in range(L.n)]
            assert truth.masks[0].tolist() == expect, show(psi)
            truth.validate()
            checked += 1
    assert checked >= 1000


# -- syntax ------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_show_parse_round_trip(seed):
    rng = random.Random(seed)
    phi = random_formula(rng, [], 5, allow_fun=True)
    assert parse(show(phi)) == phi


def test_precedence():
    f = parse("top /\\ bot \\/ top => bot <=> top")
    assert isinstance(f, S.Iff)
    assert isinstance(f.left, S.Implies)
    assert isinstance(f.left.left, S.Or)
    assert parse("a => b => c") == S.Implies(S.Mem("a", ()), S.Implies(S.Mem("b", ()), S.Mem("c", ())))


@pytest.mark.parametrize("text", ["forall x J. top", "x = ", "(top", "top /\\", "forall x:J top"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_ill_typed_formulas(set2):
    with pytest.raises(IllTyped):
        force(set2.interp, (), "forall x:Nope. top")
    with pytest.raises(IllTyped):
        force(set2.interp, (), "forall x:J. meet(x) = x")
    with pytest.raises(IllTyped):
        force(set2.interp, (), "forall x:J. frobnicate(x) = x")


# -- non-trivial bases -------------------------------------------------------


def test_excluded_middle_fails_on_arrow_base(arrow_model):
    ok, w = holds_globally(arrow_model.interp, "forall i:J. IsT(i) \\/ ~IsT(i)")
    assert not ok
    assert verify_witness(arrow_model.interp, w)
    assert w.stage_name == "t"


def test_double_negation_of_excluded_middle_holds(arrow_model):
    ok, _ = holds_globally(arrow_model.interp, "forall i:J. ~~(IsT(i) \\/ ~IsT(i))")
    assert ok


def test_truth_subobjects_are_restriction_stable(arrow_model):
    interp = arrow_model.interp
    J = arrow_model.J
    texts = [
        "IsT(x)",
        "~IsT(x)",
        "~~IsT(x)",
        "exists y:J. meet(x, y) = 0 /\\ ~(y = 0)",
        "forall y:J. (IsT(join(x, y)) => IsT(x) \\/ IsT(y))",
        "IsT(x) => IsF(x)",
    ]
    for t in texts:
        v = force(interp, (("x", J),), t)
        v.truth.validate()


def test_omega_quantification(arrow_model):
    ok, _ = holds_globally(arrow_model.interp, "forall p:Omega. holds(p) \\/ ~holds(p)")
    assert not ok
    ok, _ = holds_globally(arrow_model.interp, "forall p:Omega. ~~(holds(p) \\/ ~holds(p))")
    assert ok


def test_custom_interpretation():
    cat = fc.FinCategory.terminal()
    model = Model.set_model(FinDistLattice.chain(3))
    X = fc.constant(cat, 4)
    interp = model.interpretation(X=X)
    assert isinstance(interp, Interpretation)
    ok, _ = holds_globally(interp, "exists a:X. exists b:X. ~(a = b)")
    assert ok
    ok, _ = holds_globally(interp, "forall a:X. forall b:X. a = b")
    assert not ok
    assert np.all(force(interp, (), "top").truth.masks[0])
