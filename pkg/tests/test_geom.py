from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsynth import fincat as fc
from finsynth.geom import Model
from finsynth.latdual import FinDistLattice, descending_chains
from finsynth.modelfile import load

from .helpers import arrow_presheaves

SET_MODELS = ["set2", "set3", "diamond"]


@lru_cache(maxsize=None)
def _arrow() -> Model:
    return load("arrow-3-2").model


@pytest.fixture
def set_model(request):
    return request.getfixturevalue(request.param)


def horn_count(L: FinDistLattice) -> int:
    """Pairs ``i >= j`` with ``j = 0`` or ``i = 1``, by enumeration."""
    return sum(1 for i in range(L.n) for j in range(L.n) if L.leq(j, i) and (j == L.bottom or i == L.top))


def stage(m: Model, c: int = 0) -> FinDistLattice:
    return m.lattice.stages[c]


@pytest.mark.parametrize("set_model", SET_MODELS, indirect=True)
def test_simplices_are_descending_chains(set_model):
    L = stage(set_model)
    for n in range(4):
        assert set_model.simplex(n).sizes.tolist() == [len(descending_chains(L, n))]
    assert set_model.cube(2).sizes.tolist() == [L.n**2]


@pytest.mark.parametrize("set_model", SET_MODELS, indirect=True)
def test_horn_size(set_model):
    assert set_model.horn().sizes.tolist() == [horn_count(stage(set_model))]


def test_horn_sizes_by_stage(arrow_model):
    expect = [horn_count(stage(arrow_model, c)) for c in arrow_model.base.objects]
    assert arrow_model.horn().sizes.tolist() == expect == [3, 5]
    assert arrow_model.delta2.sizes.tolist() == [3, 6]


def test_three_chain_horn_misses_only_m_m(set3):
    D = set3.delta2
    members = np.flatnonzero(D.masks[0])
    missing = members[~set3.horn_sub.masks[0]]
    assert [D.ambient.label(0, int(k)) for k in missing] == [("m", "m")]


@pytest.mark.parametrize("set_model", SET_MODELS + ["arrow_model"], indirect=True)
def test_slice_family_sums_to_simplex(set_model):
    fam = set_model.slice_family()
    for c in set_model.base.objects:
        L = stage(set_model, c)
        assert fam.fiber_sizes(c) == [int(L.leq_matrix[:, i].sum()) for i in range(L.n)]
    assert fam.total.sizes.tolist() == set_model.delta2.sizes.tolist()


@pytest.mark.parametrize("set_model", SET_MODELS + ["arrow_model"], indirect=True)
def test_scone_family_sums_to_horn(set_model):
    fam = set_model.scone_family()
    for c in set_model.base.objects:
        L = stage(set_model, c)
        expect = [sum(1 for j in range(L.n) if L.leq(j, i) and (j == L.bottom or i == L.top)) for i in range(L.n)]
        assert fam.fiber_sizes(c) == expect
    assert fam.total.sizes.tolist() == set_model.horn_sub.sizes.tolist()


def test_three_chain_decompositions(set3):
    assert set3.slice_family().fiber_sizes(0) == [1, 2, 3]
    assert set3.scone_family().fiber_sizes(0) == [1, 1, 3]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["2", "3", "diamond"]), st.integers(0, 3))
def test_set_scone_and_lift_sizes(which, n):
    L = {"2": FinDistLattice.chain(2), "3": FinDistLattice.chain(3), "diamond": FinDistLattice.diamond()}[which]
    m = Model.set_model(L, which)
    X = fc.constant(m.base, n)
    # X_bot = 1 + (|I| - 1)|X|;  Lift(X) = (|I| - 1) + |X|
    assert m.scone(X).presheaf.sizes.tolist() == [1 + (L.n - 1) * n]
    assert m.lift(X).presheaf.sizes.tolist() == [L.n - 1 + n]
    sig = m.sigma(X)
    assert fc.is_iso(sig)[0] == (L.n == 2 or n == 1)
    assert m.scone(X).pullback_square_holds()
    assert m.scone(X).check_sum_description()


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_arrow_scone_is_stagewise(data):
    m = _arrow()
    X = data.draw(arrow_presheaves(2, cat=m.base, min_size=0))
    sc = m.scone(X)
    sizes = [1 + (stage(m, c).n - 1) * int(X.sizes[c]) for c in m.base.objects]
    assert sc.presheaf.sizes.tolist() == sizes
    assert sc.pullback_square_holds()
    assert sc.check_sum_description()
    # sigma is built twice inside and the two constructions are compared
    m.sigma(X)


def test_lift_versus_slice(set2, set3, arrow_model):
    for row in set2.global_points:
        assert set2.slice_vs_lift(row)[0]
    iso, n_slice, n_lift = set3.slice_vs_lift(set3.global_points[0])
    assert (iso, n_slice, n_lift) == (False, 1, 2)
    assert all(arrow_model.slice_vs_lift(row)[0] for row in arrow_model.global_points)


@pytest.mark.parametrize("set_model", SET_MODELS, indirect=True)
def test_set_observational_preorder_is_discrete(set_model):
    pts, rel = set_model.observational_preorder(set_model.simplex(2))
    assert np.array_equal(rel, np.eye(len(pts), dtype=bool))
    assert set_model.has_obs_top(set_model.simplex(2)) == (False, None)


def test_interval_order_is_not_observable_in_sets(set3):
    # every endofunction of J is an observation, including order-reversing ones
    pts, rel = set3.observational_preorder(set3.J)
    assert np.array_equal(rel, np.eye(3, dtype=bool))
    assert not set3.has_obs_top(set3.J)[0]


@pytest.mark.parametrize("set_model", SET_MODELS, indirect=True)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_set_open_cylinder(set_model, n):
    X = fc.constant(set_model.base, n)
    f = fc.to_terminal(X, set_model.one)
    cyl = set_model.open_cylinder(f)
    # B + (|I| - 1)|E|
    assert cyl.presheaf.sizes.tolist() == [1 + (stage(set_model).n - 1) * n]
    assert cyl.fibrewise_comparison()[0]


def test_open_cylinder_on_arrow(arrow_model):
    X = fc.constant(arrow_model.base, 2)
    f = fc.to_terminal(X, arrow_model.one)
    assert arrow_model.open_cylinder(f).fibrewise_comparison()[0]
    assert fc.is_iso(arrow_model.sigma_f(f))[0] == fc.is_iso(arrow_model.sigma(X))[0]


def test_lift_eta_is_mono(set3, arrow_model):
    for m in (set3, arrow_model):
        X = fc.constant(m.base, 2)
        assert fc.is_mono(m.lift(X).eta)


def test_lift_classify_recovers_eta(set2):
    X = fc.constant(set2.base, 3)
    L = set2.lift(X)
    phi = fc.to_terminal(X, set2.one).then(set2.top_point)
    got = L.classify(X, phi, lambda c, x: x)
    assert got.same(L.eta)


def test_connectedness(set3, arrow_model):
    for m in (set3, arrow_model):
        ok, w = m.is_p_connected(m.is_t0, fc.constant(m.base, 2))
        assert ok and w is not None
