"""Hypothesis strategies shared by the test modules."""
import numpy as np
from hypothesis import strategies as st

from finsynth import fincat as fc

ARROW = fc.FinCategory.arrow()


@st.composite
def arrow_presheaves(draw, max_size=3, cat=ARROW, min_size=1):
    """Random presheaves on ``s -> t``: two sets and a map ``P(t) -> P(s)``."""
    ns = draw(st.integers(min_size, max_size))
    nt = draw(st.integers(0, max_size if ns else 0))
    u = draw(st.lists(st.integers(0, max(ns - 1, 0)), min_size=nt, max_size=nt))
    return fc.Presheaf(cat, [ns, nt], [np.arange(ns), np.arange(nt), np.array(u, dtype=np.int64)])


@st.composite
def finite_sets(draw, max_size=4):
    n = draw(st.integers(0, max_size))
    return fc.constant(fc.FinCategory.terminal(), n)
