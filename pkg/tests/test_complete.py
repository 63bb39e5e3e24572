from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsynth import complete as cp
from finsynth import fincat as fc
from finsynth import oracles
from finsynth.errors import NotAPullback
from finsynth.geom import Model
from finsynth.latdual import FinDistLattice
from finsynth.modelfile import load

from .helpers import arrow_presheaves

LATTICES = {"2": FinDistLattice.chain(2), "3": FinDistLattice.chain(3), "diamond": FinDistLattice.diamond()}


@lru_cache(maxsize=None)
def set_model(which: str) -> Model:
    return Model.set_model(LATTICES[which], which)


@lru_cache(maxsize=None)
def arrow() -> Model:
    return load("arrow-3-2").model


# -- conditions on the terminal base, against classical statements -----------


def classical_conditions(L: FinDistLattice) -> dict[str, bool]:
    r = range(L.n)
    b, t = L.bottom, L.top
    return {
        "strict": b != t,
        "disjunctive": all(L.join[i, j] != t or i == t or j == t for i in r for j in r),
        "conjunctive": all(L.meet[i, j] != b or i == b or j == b for i in r for j in r),
        "conservative": all(L.meet[i, j] == i for i in r for j in r if i != t or j == t),
        # every function J -> J is natural, so affinity must hold for all of them
        "phoa": L.n == 1,
        "quotient_initial": all(i in (b, t) for i in r),
    }


@pytest.mark.parametrize("which", list(LATTICES))
def test_conditions_match_classical_logic(which):
    m = set_model(which)
    expect = classical_conditions(LATTICES[which])
    for name, value in expect.items():
        rep = cp.CONDITIONS[name](m)
        assert rep.holds == value, name
        assert (rep.witness is None) == value
    assert cp.check_local(m).holds == (expect["strict"] and expect["disjunctive"])


def test_phoa_witness_is_negation(set2):
    rep = cp.check_phoa(set2)
    assert not rep.holds
    assert rep.witness["env"] == {"a": ["1", "0"], "i": "1"}
    assert rep.detail["free_algebra_quasi_coherent"] is False


def test_three_chain_witnesses(set3):
    assert cp.check_conservative(set3).witness["env"] == {"i": "m", "j": "0"}
    assert cp.check_quotient_initial(set3).witness["env"] == {"i": "m"}
    core = cp.check_quotient_initial_core(set3)
    assert not core.holds and core.witness == {"point": ["m"]}


def test_arrow_model_conditions(arrow_model):
    assert cp.check_conservative(arrow_model).holds
    assert cp.check_dominant(arrow_model).holds
    assert cp.check_strict(arrow_model).holds


@pytest.mark.parametrize("which", list(LATTICES))
def test_degeneracy(which):
    m = set_model(which)
    rep = cp.quotient_initial_degeneracy(m)
    assert rep.holds
    if rep.detail["quotient_initial"] and rep.detail["strict"]:
        assert rep.detail["global_points"] == 2


def test_dominance_in_sets(set2, set3):
    assert cp.check_dominant(set2).holds
    assert not cp.check_dominant(set3).holds


def test_closed_proper_on_sets(set2):
    assert cp.check_closed_proper(set2, fc.constant(set2.base, 2)).holds


# -- orthogonality -------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(list(LATTICES)), st.integers(0, 3))
def test_set_horn_orthogonality(which, n):
    m = set_model(which)
    C = fc.constant(m.base, n)
    v = cp.is_orthogonal(C, m.horn_sub.inclusion, m)
    # the horn is a proper subset of the simplex exactly when the lattice has a middle
    proper = m.horn().total < m.delta2.presheaf().total
    assert v.holds == (n <= 1 or not proper)
    assert v.holds == oracles.unique_lifts(C, m.horn_sub.inclusion)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_arrow_orthogonality_matches_oracle(data):
    m = arrow()
    C = data.draw(arrow_presheaves(2, cat=m.base))
    for f in (m.horn_sub.inclusion, m.sigma(fc.constant(m.base, 1)), m.sigma(m.is_t0)):
        v = cp.is_orthogonal(C, f, m)
        assert v.holds == oracles.unique_lifts(C, f)


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_family_orthogonality_matches_oracle(data):
    m = arrow()
    C = data.draw(arrow_presheaves(2, cat=m.base))
    for fam in (cp.based_segal_class(m), cp.little_sierp_class(m)):
        v = cp.is_orthogonal_to_family(C, fam)
        Cs = fam.model.pull(C)
        assert v.holds == all(oracles.unique_lifts(Cs, f) for f in fam.members)


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_based_segal_implies_segal(data):
    m = arrow()
    C = data.draw(arrow_presheaves(2, cat=m.base))
    res = cp.completeness_suite(C, m, {"1": m.one})
    if res.based_segal:
        assert res.segal
    if res.little_sierp:
        assert all(v for v in res.spot_checks.values() if v is not None)


def test_internal_cross_check_runs(set3):
    C = fc.constant(set3.base, 2)
    v = cp.is_orthogonal(C, set3.horn_sub.inclusion, set3)
    assert v.cross_checked
    assert v.sizes == {"C^B": 64, "C^A": 32}


def test_suite_on_codomains(set2, set3):
    two = fc.constant(set2.base, 2)
    r2 = cp.completeness_suite(two, set2)
    assert (r2.segal, r2.based_segal, r2.little_sierp) == (True, True, True)
    r3 = cp.completeness_suite(fc.constant(set3.base, 2), set3)
    assert (r3.segal, r3.based_segal, r3.little_sierp) == (False, False, False)
    assert r3.sizes["C^Delta2"] == 64
    assert set(r2.to_json()) == {"segal", "basedSegal", "littleSierp", "sierp", "sierp_basis", "spot_checks"}


def test_arrow_two_is_little_sierp(arrow_model):
    two = fc.constant(arrow_model.base, 2)
    assert cp.completeness_suite(two, arrow_model).little_sierp


# -- pullback squares ------------------------------------------------------------


def test_square_along_member_is_a_pullback(set3):
    f = set3.horn_sub.inclusion
    B = f.target
    for row in fc.homs(set3.one, B):
        g = fc.NatTrans.from_row(set3.one, B, row)
        sq = cp.Square.along(f, g).validate()
        assert sq.left.source.total <= 1
    out = cp.check_pullback_locality(fc.constant(set3.base, 2), f, cp.segal_class(set3), [cp.Square.along(f, fc.NatTrans.from_row(set3.one, B, fc.homs(set3.one, B)[0]))], set3)
    assert out["per_square"] == [True]


def test_non_pullback_square_is_rejected(set2):
    one = set2.one
    two = fc.constant(set2.base, 2)
    bang = fc.to_terminal(two, one)
    # the square 2 -> 1 <- 1 with P = 2 and both legs to 1 is not a pullback
    sq = cp.Square(bang, bang, one.identity(), one.identity())
    with pytest.raises(NotAPullback):
        sq.validate()


def test_oracle_homs_agree_with_search(set3):
    X = set3.delta2.presheaf()
    for Y in (set3.J, fc.constant(set3.base, 2)):
        assert np.array_equal(oracles.brute_homs(X, Y), fc.homs(X, Y))
    assert oracles.count_global_points(set3.J) == 3
