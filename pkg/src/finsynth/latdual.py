"""Finite distributive lattices, J-algebras and the Spec/Opens adjunction.

A finitely presented J-algebra is stored as a finite lattice with a structure
map from J and a list of generators.  Every element also carries an
irredundant disjunctive normal form over the generators with coefficients
in J, which is what lets a homomorphism be evaluated from generator images
alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .budget import check as budget_check
from .errors import LatticeHomFailure, NaturalityFailure, StageAxiomFailure
from .fincat import IDX, FinCategory, NatTrans, Presheaf, ProductPresheaf, RowIndex, product, terminal

# ---------------------------------------------------------------------------
# External lattices
# ---------------------------------------------------------------------------


class FinDistLattice:
    def __init__(self, meet, join, bottom: int, top: int, names: Sequence[str] | None = None, validate: bool = True):
        self.meet = np.ascontiguousarray(meet, dtype=IDX)
        self.join = np.ascontiguousarray(join, dtype=IDX)
        self.bottom = int(bottom)
        self.top = int(top)
        self.names = list(names) if names is not None else [str(a) for a in range(len(self.meet))]
        if validate:
            self.validate()

    @property
    def n(self) -> int:
        return len(self.meet)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"FinDistLattice({self.names})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FinDistLattice)
            and np.array_equal(self.meet, other.meet)
            and np.array_equal(self.join, other.join)
            and (self.bottom, self.top) == (other.bottom, other.top)
        )

    def __hash__(self) -> int:
        return hash((self.meet.tobytes(), self.join.tobytes(), self.bottom, self.top))

    def validate(self, stage=None) -> "FinDistLattice":
        n = self.n
        if self.meet.shape != (n, n) or self.join.shape != (n, n) or n == 0:
            raise StageAxiomFailure(stage, "shape", (n,))
        if self.meet.min() < 0 or self.meet.max() >= n or self.join.min() < 0 or self.join.max() >= n:
            raise StageAxiomFailure(stage, "closure", ())
        if not (0 <= self.bottom < n and 0 <= self.top < n):
            raise StageAxiomFailure(stage, "bounds", (self.bottom, self.top))
        budget_check(n**3, "lattice axiom scan")
        code, a, b, c = kernels.lattice_scan(self.meet, self.join, self.bottom, self.top)
        if code:
            arity = {1: 1, 2: 1, 3: 2, 4: 2, 7: 2, 8: 1}.get(int(code), 3)
            raise StageAxiomFailure(stage, kernels.AXIOMS[code], (int(a), int(b), int(c))[:arity])
        return self

    @cached_property
    def leq_matrix(self) -> np.ndarray:
        return self.meet == np.arange(self.n)[:, None]

    def leq(self, a: int, b: int) -> bool:
        return bool(self.meet[a, b] == a)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def chain(cls, k: int) -> "FinDistLattice":
        r = np.arange(k)
        if k == 1:
            names = ["0=1"]
        elif k == 3:
            names = ["0", "m", "1"]
        else:
            names = ["0"] + [f"m{i}" for i in range(1, k - 1)] + ["1"]
        return cls(np.minimum.outer(r, r), np.maximum.outer(r, r), 0, k - 1, names)

    @classmethod
    def product(cls, L: "FinDistLattice", M: "FinDistLattice") -> "FinDistLattice":
        n, m = L.n, M.n
        a = np.arange(n * m)
        i, j = a // m, a % m
        meet = L.meet[i[:, None], i[None, :]] * m + M.meet[j[:, None], j[None, :]]
        join = L.join[i[:, None], i[None, :]] * m + M.join[j[:, None], j[None, :]]
        names = [f"({p},{q})" for p in L.names for q in M.names]
        return cls(meet, join, L.bottom * m + M.bottom, L.top * m + M.top, names)

    @classmethod
    def diamond(cls) -> "FinDistLattice":
        two = cls.chain(2)
        return cls.product(two, two)

    def dual(self) -> "FinDistLattice":
        return FinDistLattice(self.join, self.meet, self.top, self.bottom, self.names)

    def to_json(self) -> dict:
        return {
            "elements": self.n,
            "meet": self.meet.tolist(),
            "join": self.join.tolist(),
            "bottom": self.bottom,
            "top": self.top,
        }


@dataclass
class LatticeHom:
    source: FinDistLattice
    target: FinDistLattice
    map: np.ndarray

    def __post_init__(self):
        self.map = np.asarray(self.map, dtype=IDX)
        self.validate()

    def validate(self) -> "LatticeHom":
        S, T, h = self.source, self.target, self.map
        if h.shape != (S.n,):
            raise LatticeHomFailure("map has the wrong length")
        if h.size and (h.min() < 0 or h.max() >= T.n):
            raise LatticeHomFailure("map leaves the target")
        if h[S.bottom] != T.bottom or h[S.top] != T.top:
            raise LatticeHomFailure("bounds are not preserved")
        for name, s_tab, t_tab in (("meet", S.meet, T.meet), ("join", S.join, T.join)):
            bad = np.argwhere(h[s_tab] != t_tab[h[:, None], h[None, :]])
            if bad.size:
                a, b = (int(v) for v in bad[0])
                raise LatticeHomFailure(f"{name} of {S.names[a]}, {S.names[b]} is not preserved")
        return self

    def is_bijective(self) -> bool:
        return self.source.n == self.target.n and len(np.unique(self.map)) == self.target.n


def preserves(h: np.ndarray, S: FinDistLattice, T: FinDistLattice) -> np.ndarray:
    """Vectorised hom test for a stack of candidate maps ``h[k, a]``."""
    h = np.atleast_2d(h)
    ok = (h[:, S.bottom] == T.bottom) & (h[:, S.top] == T.top)
    step = max(1, (1 << 22) // max(1, S.n * S.n))
    for lo in range(0, len(h), step):
        part = h[lo : lo + step]
        for s_tab, t_tab in ((S.meet, T.meet), (S.join, T.join)):
            lhs = part[:, s_tab]
            rhs = t_tab[part[:, :, None], part[:, None, :]]
            ok[lo : lo + step] &= (lhs == rhs).all(axis=(1, 2))
    return ok


# ---------------------------------------------------------------------------
# J-algebras
# ---------------------------------------------------------------------------

Term = tuple[frozenset, int]  # (generator set, coefficient in J)


def render_dnf(terms: Sequence[Term], J: FinDistLattice, gen_names: Sequence[str]) -> str:
    if not terms:
        return J.names[J.bottom]
    parts = []
    for gens, coef in terms:
        atoms = [gen_names[g] for g in sorted(gens)]
        if coef != J.top or not atoms:
            atoms = [J.names[coef]] + atoms
        parts.append(" /\\ ".join(atoms))
    return " \\/ ".join(parts)


@dataclass
class FinAlgebra:
    """A finite J-algebra with generators and normal forms.

    ``dnf[a]`` is a list of ``(S, c)`` with ``a = \\/ (c /\\ /\\_{i in S} x_i)``.
    """

    lattice: FinDistLattice
    base: FinDistLattice
    structure: np.ndarray
    generators: list[int]
    gen_names: list[str]
    dnf: list[list[Term]]
    relations: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.structure = np.asarray(self.structure, dtype=IDX)
        LatticeHom(self.base, self.lattice, self.structure)

    @property
    def n(self) -> int:
        return self.lattice.n

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"FinAlgebra({self.n} elements over {self.base.n}-element J, {len(self.generators)} generators)"

    @cached_property
    def names(self) -> list[str]:
        return [render_dnf(t, self.base, self.gen_names) for t in self.dnf]

    def meet(self, a: int, b: int) -> int:
        return int(self.lattice.meet[a, b])

    def join(self, a: int, b: int) -> int:
        return int(self.lattice.join[a, b])

    def gen(self, i: int) -> int:
        return self.generators[i]

    def const(self, j: int) -> int:
        return int(self.structure[j])

    def evaluate(self, images: np.ndarray) -> np.ndarray:
        """Values in J of every element, for stacked generator images ``images[k, i]``."""
        J = self.base
        images = np.atleast_2d(np.asarray(images, dtype=IDX))
        K = images.shape[0]
        out = np.full((K, self.n), J.bottom, dtype=IDX)
        for a, terms in enumerate(self.dnf):
            acc = np.full(K, J.bottom, dtype=IDX)
            for gens, coef in terms:
                t = np.full(K, coef, dtype=IDX)
                for g in gens:
                    t = J.meet[t, images[:, g]]
                acc = J.join[acc, t]
            out[:, a] = acc
        return out

    def check_normal_forms(self) -> None:
        """Each normal form denotes its own element."""
        for a, terms in enumerate(self.dnf):
            val = self.const(self.base.bottom)
            for gens, coef in terms:
                t = self.const(coef)
                for g in gens:
                    t = self.meet(t, self.generators[g])
                val = self.join(val, t)
            if val != a:
                raise LatticeHomFailure(f"normal form of element {a} evaluates to {val}")


def _monotone_maps(J: FinDistLattice, n: int) -> np.ndarray:
    """All monotone maps from the Boolean cube ``{0,1}^n`` (bitmask order) to J."""
    pts = 1 << n
    leq = J.leq_matrix
    rows = np.zeros((1, 0), dtype=IDX)
    for s in range(pts):
        below = [s & ~(1 << i) for i in range(n) if s >> i & 1]
        cand = np.repeat(rows, J.n, axis=0)
        vals = np.tile(np.arange(J.n), len(rows))
        ok = np.ones(len(cand), dtype=bool)
        for t in below:
            ok &= leq[cand[:, t], vals]
        rows = np.concatenate([cand[ok], vals[ok, None]], axis=1)
        budget_check(len(rows), "free algebra")
    return rows[np.lexsort(rows.T[::-1])] if len(rows) > 1 else rows


def _cube_dnf(values: np.ndarray, J: FinDistLattice, n: int) -> list[Term]:
    terms = []
    for s in range(1 << n):
        below = J.bottom
        for i in range(n):
            if s >> i & 1:
                below = J.join[below, values[s & ~(1 << i)]]
        v = int(values[s])
        if not J.leq(v, below):
            terms.append((frozenset(i for i in range(n) if s >> i & 1), v))
    return terms


def _pointwise_algebra(values: np.ndarray, J: FinDistLattice, names: Sequence[str] | None = None):
    """Lattice of stacked rows under pointwise operations."""
    N = len(values)
    index = RowIndex(values)
    m = J.meet[values[:, None, :], values[None, :, :]].reshape(N * N, -1)
    j = J.join[values[:, None, :], values[None, :, :]].reshape(N * N, -1)
    meet = index.lookup(m).reshape(N, N)
    join = index.lookup(j).reshape(N, N)
    width = values.shape[1]
    bottom = int(index.lookup(np.full((1, width), J.bottom))[0])
    top = int(index.lookup(np.full((1, width), J.top))[0])
    consts = index.lookup(np.repeat(np.arange(J.n)[:, None], width, axis=1))
    if min(meet.min(), join.min(), bottom, top) < 0:
        raise StageAxiomFailure(None, "closure", ())
    # pointwise operations into a distributive lattice satisfy every axiom
    return FinDistLattice(meet, join, bottom, top, names, validate=False), index, consts


def free_algebra(J: FinDistLattice, n: int, names: Sequence[str] | None = None) -> FinAlgebra:
    """``J[x1..xn]`` as monotone maps from the Boolean cube to J."""
    values = _monotone_maps(J, n)
    L, index, consts = _pointwise_algebra(values, J)
    gen_names = list(names) if names is not None else [f"x{i + 1}" for i in range(n)]
    gens = []
    for i in range(n):
        row = np.array([J.top if s >> i & 1 else J.bottom for s in range(1 << n)], dtype=IDX)
        gens.append(int(index.lookup(row[None, :])[0]))
    dnf = [_cube_dnf(v, J, n) for v in values]
    A = FinAlgebra(L, J, consts, gens, gen_names, dnf)
    A.lattice.names = A.names
    A.values = values
    return A


def quotient(A: FinAlgebra, pairs: Sequence[tuple[int, int]], labels: Sequence[tuple[str, str]] | None = None) -> tuple[FinAlgebra, np.ndarray]:
    """``A`` modulo the congruence generated by ``pairs``, with the quotient map."""
    rep = congruence(A, pairs)
    return _quotient_by(A, rep, labels if labels is not None else [(A.names[a], A.names[b]) for a, b in pairs])


def congruence(A: FinAlgebra, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Least congruence containing ``pairs``, as an array of least class members."""
    n = A.n
    a = np.array([p[0] for p in pairs], dtype=IDX)
    b = np.array([p[1] for p in pairs], dtype=IDX)
    lab = kernels.union_find(n, a, b)
    first = np.full(int(lab.max()) + 1, n, dtype=IDX)
    np.minimum.at(first, lab, np.arange(n))
    return np.asarray(kernels.congruence_closure(A.lattice.meet, A.lattice.join, first[lab]), dtype=IDX)


def _quotient_by(A: FinAlgebra, rep: np.ndarray, relations) -> tuple[FinAlgebra, np.ndarray]:
    reps = np.unique(rep)
    q = np.searchsorted(reps, rep).astype(IDX)
    L = A.lattice
    meet = q[L.meet[reps[:, None], reps[None, :]]]
    join = q[L.join[reps[:, None], reps[None, :]]]
    lat = FinDistLattice(meet, join, q[L.bottom], q[L.top])
    # name each class by its largest member
    tops = reps.copy()
    for a in range(A.n):
        tops[q[a]] = L.join[tops[q[a]], a]
    B = FinAlgebra(
        lat,
        A.base,
        q[A.structure],
        [int(q[g]) for g in A.generators],
        list(A.gen_names),
        [A.dnf[t] for t in tops],
        list(A.relations) + list(relations),
    )
    B.lattice.names = B.names
    return B, q


def chain_algebra(J: FinDistLattice, n: int) -> FinAlgebra:
    """``J[x1..xn] / (x1 >= ... >= xn)``."""
    A = free_algebra(J, n)
    pairs = [(A.meet(A.gen(i), A.gen(i + 1)), A.gen(i + 1)) for i in range(n - 1)]
    labels = [(f"x{i + 1} /\\ x{i + 2}", f"x{i + 2}") for i in range(n - 1)]
    return quotient(A, pairs, labels)[0]


def opens_algebra(n_points: int, J: FinDistLattice) -> FinAlgebra:
    """``J^X`` for a finite set ``X`` of ``n_points`` points."""
    budget_check(J.n**n_points, "opens algebra")
    if n_points:
        values = np.indices((J.n,) * n_points).reshape(n_points, -1).T.astype(IDX)
    else:
        values = np.zeros((1, 0), dtype=IDX)
    if n_points:
        L, index, consts = _pointwise_algebra(values, J, [",".join(J.names[v] for v in row) for row in values])
        gens = []
        for x in range(n_points):
            row = np.full(n_points, J.bottom, dtype=IDX)
            row[x] = J.top
            gens.append(int(index.lookup(row[None, :])[0]))
    else:
        L = FinDistLattice([[0]], [[0]], 0, 0, ["()"])
        consts = np.zeros(J.n, dtype=IDX)
        gens = []
    dnf = [[(frozenset([x]), int(v)) for x, v in enumerate(row) if v != J.bottom] for row in values]
    A = FinAlgebra(L, J, consts, gens, [f"d{x}" for x in range(n_points)], dnf)
    A.values = values
    return A


def enum_homs(A: FinAlgebra) -> np.ndarray:
    """Spec of ``A``: all J-algebra maps ``A -> J``, one per row, sorted."""
    J = A.base
    k = len(A.generators)
    budget_check(J.n**k, "spec")
    if k:
        images = np.indices((J.n,) * k).reshape(k, -1).T.astype(IDX)
    else:
        images = np.zeros((1, 0), dtype=IDX)
    maps = A.evaluate(images)
    ok = preserves(maps, A.lattice, J) & (maps[:, A.structure] == np.arange(J.n)).all(axis=1)
    pts = np.unique(maps[ok], axis=0)
    return pts.reshape(-1, A.n)


def spec_points(A: FinAlgebra) -> np.ndarray:
    return enum_homs(A)


def unit(n_points: int, J: FinDistLattice) -> np.ndarray:
    """``eta_X``: point ``x`` goes to evaluation at ``x``, as an index into Spec(Opens X)."""
    O = opens_algebra(n_points, J)
    pts = enum_homs(O)
    idx = RowIndex(pts).lookup(O.values.T) if n_points else np.zeros(0, IDX)
    if np.any(idx < 0):
        raise LatticeHomFailure("evaluation at a point is not a homomorphism")
    return idx


def counit(A: FinAlgebra) -> LatticeHom:
    """``eps_A``: ``a`` goes to the observation ``p -> p(a)`` on Spec(A)."""
    pts = enum_homs(A)
    O = opens_algebra(len(pts), A.base)
    if len(pts):
        idx = RowIndex(O.values).lookup(pts.T)
    else:
        idx = np.zeros(A.n, dtype=IDX)
    return LatticeHom(A.lattice, O.lattice, idx)


def is_quasi_coherent(A: FinAlgebra) -> bool:
    return counit(A).is_bijective()


def is_affine(n_points: int, J: FinDistLattice) -> bool:
    eta = unit(n_points, J)
    n_spec = len(enum_homs(opens_algebra(n_points, J)))
    return n_spec == n_points and len(np.unique(eta)) == n_points


def congruences(A: FinAlgebra) -> list[np.ndarray]:
    """Every congruence of ``A`` as joins of principal congruences."""
    n = A.n
    ident = np.arange(n, dtype=IDX)
    L = A.lattice
    principal = {}
    for a in range(n):
        for b in range(n):
            if a != b and L.leq(a, b):
                r = congruence(A, [(a, b)])
                principal[r.tobytes()] = r
    found = {ident.tobytes(): ident}
    frontier = [ident]
    gens = list(principal.values())
    while frontier:
        nxt = []
        for th in frontier:
            for p in gens:
                pairs = list(zip(range(n), th)) + list(zip(range(n), p))
                j = congruence(A, pairs)
                key = j.tobytes()
                if key not in found:
                    found[key] = j
                    nxt.append(j)
        frontier = nxt
        budget_check(len(found), "congruence lattice")
    return sorted(found.values(), key=lambda r: (-len(np.unique(r)), r.tolist()))


def is_stably_quasi_coherent(A: FinAlgebra) -> tuple[bool, np.ndarray | None]:
    for th in congruences(A):
        B, _ = _quotient_by(A, th, [])
        if not is_quasi_coherent(B):
            return False, th
    return True, None


def triangle_identities(n_points: int, A: FinAlgebra) -> bool:
    """Both triangle identities of the adjunction on the given instances."""
    J = A.base
    # Opens(eta_X) . eps_{Opens X} = id
    O = opens_algebra(n_points, J)
    eta = unit(n_points, J)
    eps_O = counit(O)
    pts_O = enum_homs(O)
    O2 = opens_algebra(len(pts_O), J)
    back = RowIndex(O.values).lookup(O2.values[:, eta]) if n_points else np.zeros(O2.n, IDX)
    first = np.array_equal(back[eps_O.map], np.arange(O.n))
    # Spec(eps_A) . eta_{Spec A} = id
    pts = enum_homs(A)
    eps = counit(A)
    O_spec = opens_algebra(len(pts), J)
    spec_of_O = enum_homs(O_spec)
    eta_spec = unit(len(pts), J)
    pulled = spec_of_O[:, eps.map] if len(spec_of_O) else np.zeros((0, A.n), IDX)
    idx = RowIndex(pts).lookup(pulled) if len(pulled) else np.zeros(0, IDX)
    second = np.array_equal(idx[eta_spec], np.arange(len(pts))) if len(pts) else True
    return bool(first and second)


def descending_chains(J: FinDistLattice, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0), dtype=IDX)
    rows = np.indices((J.n,) * n).reshape(n, -1).T.astype(IDX)
    ok = np.ones(len(rows), dtype=bool)
    for i in range(n - 1):
        ok &= J.leq_matrix[rows[:, i + 1], rows[:, i]]
    return rows[ok]


def simplex_duality(J: FinDistLattice, n: int) -> tuple[bool, np.ndarray]:
    """Spec of the chain algebra versus descending chains of length ``n``.

    Returns the verdict and, for each point of Spec, the index of its chain.
    """
    A = chain_algebra(J, n)
    pts = enum_homs(A)
    chains = descending_chains(J, n)
    coords = pts[:, A.generators] if n else np.zeros((len(pts), 0), IDX)
    idx = RowIndex(chains).lookup(coords)
    ok = len(pts) == len(chains) and bool(np.all(idx >= 0)) and len(np.unique(idx)) == len(chains)
    return ok, idx


def closure_count(J: FinDistLattice, n: int) -> int:
    """Number of functions ``J^n -> J`` generated by constants and projections."""
    pts = np.indices((J.n,) * n).reshape(n, -1).T if n else np.zeros((1, 0), IDX)
    start = [np.full(len(pts), j, dtype=IDX) for j in range(J.n)] + [pts[:, i].astype(IDX) for i in range(n)]
    found = {f.tobytes(): f for f in start}
    frontier = list(found.values())
    while frontier:
        nxt = []
        items = list(found.values())
        for f in frontier:
            for g in items:
                for h in (J.meet[f, g], J.join[f, g]):
                    key = h.tobytes()
                    if key not in found:
                        found[key] = h
                        nxt.append(h)
        frontier = nxt
    return len(found)


# ---------------------------------------------------------------------------
# Internal lattices
# ---------------------------------------------------------------------------


class InternalLattice:
    """A presheaf whose stages are lattices and whose restrictions are homs."""

    def __init__(
        self,
        cat: FinCategory,
        stages: Sequence[FinDistLattice],
        restrictions: Sequence[np.ndarray],
        validate: bool = True,
    ):
        self.cat = cat
        self.stages = list(stages)
        labels = [L.names for L in self.stages]
        self.carrier = Presheaf(cat, [L.n for L in self.stages], restrictions, labels, validate=validate)
        if validate:
            self.validate()

    def __repr__(self) -> str:
        return f"InternalLattice(sizes={self.carrier.sizes.tolist()})"

    @classmethod
    def constant(cls, cat: FinCategory, L: FinDistLattice) -> "InternalLattice":
        return cls(cat, [L] * cat.n_objects, [np.arange(L.n) for _ in cat.morphisms])

    def validate(self) -> "InternalLattice":
        cat = self.cat
        for c, L in enumerate(self.stages):
            L.validate(stage=cat.obj_names[c])
        for f in cat.non_identities:
            c, d = cat.src[f], cat.tgt[f]
            r = self.carrier.act[f]
            Lc, Ld = self.stages[c], self.stages[d]
            if r[Ld.bottom] != Lc.bottom:
                raise NaturalityFailure(cat.mor_names[f], "bottom is not preserved")
            if r[Ld.top] != Lc.top:
                raise NaturalityFailure(cat.mor_names[f], "top is not preserved")
            for name, td, tc in (("meet", Ld.meet, Lc.meet), ("join", Ld.join, Lc.join)):
                bad = np.argwhere(r[td] != tc[r[:, None], r[None, :]])
                if bad.size:
                    a, b = (int(v) for v in bad[0])
                    raise NaturalityFailure(cat.mor_names[f], f"{name} of {Ld.names[a]}, {Ld.names[b]}")
        return self

    def stage(self, c: int) -> FinDistLattice:
        return self.stages[c]

    @cached_property
    def bottoms(self) -> np.ndarray:
        return np.array([L.bottom for L in self.stages], dtype=IDX)

    @cached_property
    def tops(self) -> np.ndarray:
        return np.array([L.top for L in self.stages], dtype=IDX)

    @cached_property
    def square(self) -> ProductPresheaf:
        return product(self.carrier, self.carrier)

    def _binary(self, tables) -> NatTrans:
        P = self.square
        comps = []
        for c, t in enumerate(tables):
            a, b = P.coordinates(c)
            comps.append(t[a, b])
        return NatTrans(P, self.carrier, comps)

    @cached_property
    def meet(self) -> NatTrans:
        return self._binary([L.meet for L in self.stages])

    @cached_property
    def join(self) -> NatTrans:
        return self._binary([L.join for L in self.stages])

    @cached_property
    def bottom(self) -> NatTrans:
        return NatTrans(terminal(self.cat), self.carrier, [[b] for b in self.bottoms])

    @cached_property
    def top(self) -> NatTrans:
        return NatTrans(terminal(self.cat), self.carrier, [[t] for t in self.tops])

    def dual(self) -> "InternalLattice":
        return InternalLattice(self.cat, [L.dual() for L in self.stages], self.carrier.act)

    def reindex(self, F) -> "InternalLattice":
        return InternalLattice(F.source, [self.stages[c] for c in F.obj], [self.carrier.act[f] for f in F.mor], validate=False)


def validate_internal_lattice(L: InternalLattice) -> dict:
    """Validate and return a per-stage report."""
    L.validate()
    return {L.cat.obj_names[c]: {"elements": s.n, "bottom": s.names[s.bottom], "top": s.names[s.top]} for c, s in enumerate(L.stages)}
