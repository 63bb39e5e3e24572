import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsynth import fincat as fc
from finsynth.errors import AssocFailure, NaturalityFailure, NonComposable, RestrictionStabilityFailure
from finsynth.oracles import brute_homs

from .helpers import ARROW, arrow_presheaves, finite_sets


def test_arrow_category_shape():
    assert ARROW.n_objects == 2
    assert ARROW.n_morphisms == 3
    assert ARROW.compose(2, 0) == 2
    assert ARROW.compose(1, 2) == 2


def test_self_composite_of_non_endo_is_rejected():
    with pytest.raises(NonComposable):
        ARROW.compose(2, 2)


def test_non_associative_table_is_rejected():
    # e.e = e, e.f = e, f.e = f, f.f = e: (f.f).f = e but f.(f.f) = f
    comp = [(0, 0, 0), (0, 1, 0), (1, 0, 1), (1, 1, 0)]
    with pytest.raises(AssocFailure):
        fc.FinCategory.from_spec(["*"], [("e", 0, 0), ("f", 0, 0)], comp)


def test_missing_composite_is_rejected():
    with pytest.raises(NonComposable):
        fc.FinCategory.from_spec(["*"], [("e", 0, 0)], [])


def test_indiscrete_and_poset_validate():
    assert fc.FinCategory.indiscrete(3).n_morphisms == 9
    chain = fc.FinCategory.poset(3, lambda a, b: a <= b)
    assert chain.n_morphisms == 6


def test_omega_sizes():
    assert fc.omega(fc.FinCategory.terminal()).sizes.tolist() == [2]
    assert fc.omega(ARROW).sizes.tolist() == [2, 3]
    assert fc.omega(fc.FinCategory.indiscrete(2)).sizes.tolist() == [2, 2]


def test_truth_is_restriction_stable():
    for cat in (ARROW, fc.FinCategory.indiscrete(2), fc.FinCategory.poset(3, lambda a, b: a <= b)):
        fc.omega(cat).truth.validate()


def test_unstable_subobject_is_rejected():
    P = fc.representable(ARROW, 1)
    with pytest.raises(RestrictionStabilityFailure):
        fc.Subobject(P, [np.array([False]), np.array([True])])


def test_unnatural_map_is_rejected():
    X = fc.Presheaf(ARROW, [2, 1], [np.arange(2), np.arange(1), np.array([0])])
    Y = fc.Presheaf(ARROW, [2, 1], [np.arange(2), np.arange(1), np.array([1])])
    with pytest.raises(NaturalityFailure):
        fc.NatTrans(X, Y, [np.array([0, 1]), np.array([0])])


@settings(max_examples=60, deadline=None)
@given(arrow_presheaves(), arrow_presheaves())
def test_homs_match_brute_force(X, Y):
    assert np.array_equal(fc.homs(X, Y), brute_homs(X, Y))


@settings(max_examples=40, deadline=None)
@given(arrow_presheaves())
def test_yoneda(X):
    for c in ARROW.objects:
        assert len(fc.homs(fc.representable(ARROW, c), X)) == X.sizes[c]


@settings(max_examples=30, deadline=None)
@given(arrow_presheaves(2), arrow_presheaves(2), arrow_presheaves(2))
def test_exponential_adjunction(Z, X, Y):
    E = fc.exponential(X, Y)
    assert len(fc.homs(Z, E)) == len(fc.homs(fc.product(Z, X), Y))


@settings(max_examples=30, deadline=None)
@given(arrow_presheaves(2), arrow_presheaves(2))
def test_curry_uncurry_round_trip(X, Y):
    E = fc.exponential(X, Y)
    P = fc.product(E, X)
    maps = [E.ev] + [P.projections[1].then(fc.NatTrans.from_row(X, Y, r)) for r in fc.homs(X, Y)[:4]]
    for h in maps:
        assert E.uncurry(E.curry(h, P), P).same(h)


@settings(max_examples=40, deadline=None)
@given(arrow_presheaves(), arrow_presheaves())
def test_product_and_coproduct_sizes(X, Y):
    assert fc.product(X, Y).sizes.tolist() == (X.sizes * Y.sizes).tolist()
    assert fc.coproduct(X, Y).sizes.tolist() == (X.sizes + Y.sizes).tolist()


@settings(max_examples=40, deadline=None)
@given(finite_sets(), st.data())
def test_pushout_of_sets_counts_classes(A, data):
    one = fc.FinCategory.terminal()
    nb = data.draw(st.integers(1, 4))
    nc = data.draw(st.integers(1, 4))
    B, C = fc.constant(one, nb), fc.constant(one, nc)
    f = data.draw(st.lists(st.integers(0, nb - 1), min_size=A.total, max_size=A.total))
    g = data.draw(st.lists(st.integers(0, nc - 1), min_size=A.total, max_size=A.total))
    F = fc.NatTrans(A, B, [np.array(f, dtype=np.int64)])
    G = fc.NatTrans(A, C, [np.array(g, dtype=np.int64)])
    po = fc.pushout(F, G)
    # oracle: connected components of the bipartite graph B + C with edges f(a) -- g(a)
    parent = list(range(nb + nc))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in zip(f, g):
        parent[find(nb + b)] = find(a)
    assert po.total == len({find(x) for x in range(nb + nc)})
    assert F.then(po.inl).same(G.then(po.inr))


@settings(max_examples=40, deadline=None)
@given(arrow_presheaves(), arrow_presheaves())
def test_pullback_universal_count(X, Y):
    one = fc.terminal(ARROW)
    pb = fc.pullback(fc.to_terminal(X, one), fc.to_terminal(Y, one))
    assert pb.sizes.tolist() == (X.sizes * Y.sizes).tolist()


def test_characteristic_map_round_trip():
    X = fc.Presheaf(ARROW, [3, 2], [np.arange(3), np.arange(2), np.array([0, 2])])
    for masks in ([[True, False, False], [True, False]], [[True, False, True], [False, False]]):
        S = fc.Subobject(X, [np.array(m) for m in masks])
        assert fc.classify(fc.characteristic_map(S)).same(S)


@settings(max_examples=40, deadline=None)
@given(arrow_presheaves(), arrow_presheaves())
def test_iso_detection(X, Y):
    assert fc.is_iso(X.identity())[0]
    for row in fc.homs(X, Y)[:4]:
        h = fc.NatTrans.from_row(X, Y, row)
        ok, inv = fc.is_iso(h)
        assert ok == (fc.is_mono(h) and fc.is_epi(h))
        if ok:
            assert h.then(inv).same(X.identity())


def test_elements_category_and_total():
    X = fc.Presheaf(ARROW, [2, 2], [np.arange(2), np.arange(2), np.array([0, 0])])
    E = fc.elements_category(X)
    assert E.n_objects == 4
    assert E.n_morphisms == 6
    G = fc.pull_to_elements(X, E)
    T = fc.total(G, E)
    # the total of a pulled-back presheaf is the product
    assert T.sizes.tolist() == (X.sizes * X.sizes).tolist()


def test_fibers_total_iso():
    X = fc.Presheaf(ARROW, [3, 2], [np.arange(3), np.arange(2), np.array([0, 2])])
    Y = fc.Presheaf(ARROW, [2, 1], [np.arange(2), np.arange(1), np.array([0])])
    for row in fc.homs(X, Y):
        p = fc.NatTrans.from_row(X, Y, row)
        E = fc.elements_category(Y)
        T = fc.total(fc.fibers(p, E), E)
        assert fc.is_iso(fc.fiber_iso(p, T))[0]
