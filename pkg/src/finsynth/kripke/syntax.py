"""Surface syntax for internal formulas.

Grammar, loosest binding first::

    formula := impl ('<=>' impl)*
    impl    := disj ('=>' impl)?
    disj    := conj ('\\/' conj)*
    conj    := unary ('/\\' unary)*
    unary   := '~' unary | ('forall' | 'exists') IDENT ':' type '.' formula | atom
    atom    := 'top' | 'bot' | term '=' term | IDENT ['(' term, ... ')'] | '(' formula ')'
    term    := IDENT ['(' term, ... ')'] | '(' term ',' term ')'
    type    := factor ('*' factor)*
    factor  := tbase ['^' factor]
    tbase   := IDENT ['(' type ')'] | '(' type ')'

Quantifier bodies extend as far right as possible.  ``<=>`` and the
connectives ``/\\``, ``\\/`` associate to the left, ``=>`` to the right.
The printer parenthesises every compound, so ``parse(show(f)) == f``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError

# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple


@dataclass(frozen=True)
class Pair:
    left: object
    right: object


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class TypeName:
    name: str


@dataclass(frozen=True)
class TypeApp:
    ctor: str
    arg: object


@dataclass(frozen=True)
class TypeExp:
    """``base ^ exponent``: maps from ``exponent`` to ``base``."""

    base: object
    exponent: object


@dataclass(frozen=True)
class TypeProd:
    left: object
    right: object


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Mem:
    pred: str
    args: tuple


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    type: object
    body: object


@dataclass(frozen=True)
class Exists:
    var: str
    type: object
    body: object


BINARY = {And: "/\\", Or: "\\/", Implies: "=>", Iff: "<=>"}

# -- printing ----------------------------------------------------------------


def show_term(t) -> str:
    if isinstance(t, Name):
        return t.name
    if isinstance(t, App):
        return f"{t.fn}({', '.join(show_term(a) for a in t.args)})"
    if isinstance(t, Pair):
        return f"({show_term(t.left)}, {show_term(t.right)})"
    raise TypeError(f"not a term: {t!r}")


def show_type(t) -> str:
    if isinstance(t, TypeName):
        return t.name
    if isinstance(t, TypeApp):
        return f"{t.ctor}({show_type(t.arg)})"
    if isinstance(t, TypeExp):
        return f"{_type_atom(t.base)}^{_type_atom(t.exponent)}"
    if isinstance(t, TypeProd):
        return f"({show_type(t.left)} * {show_type(t.right)})"
    raise TypeError(f"not a type: {t!r}")


def _type_atom(t) -> str:
    s = show_type(t)
    return f"({s})" if isinstance(t, TypeExp) else s


def show(f) -> str:
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, Eq):
        return f"{show_term(f.left)} = {show_term(f.right)}"
    if isinstance(f, Mem):
        return f"{f.pred}({', '.join(show_term(a) for a in f.args)})" if f.args else f.pred
    if type(f) in BINARY:
        return f"({show(f.left)} {BINARY[type(f)]} {show(f.right)})"
    if isinstance(f, Not):
        return f"~{show(f.body)}"
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        return f"({q} {f.var}:{show_type(f.type)}. {show(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(<=>|=>|/\\|\\/|[A-Za-z0-9_']+|[~=(),:.*^])")
KEYWORDS = {"forall", "exists", "top", "bot"}


def tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected or 'a token'} but found {tok or 'end of input'} at token {self.i}")
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.take()
        if not re.fullmatch(r"[A-Za-z0-9_']+", tok) or tok in KEYWORDS:
            raise ParseError(f"expected an identifier but found {tok!r}")
        return tok

    # formulas
    def formula(self):
        f = self.impl()
        while self.peek() == "<=>":
            self.take()
            f = Iff(f, self.impl())
        return f

    def impl(self):
        f = self.disj()
        if self.peek() == "=>":
            self.take()
            return Implies(f, self.impl())
        return f

    def disj(self):
        f = self.conj()
        while self.peek() == "\\/":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek() == "/\\":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok == "~":
            self.take()
            return Not(self.unary())
        if tok in ("forall", "exists"):
            self.take()
            var = self.ident()
            self.take(":")
            ty = self.type()
            self.take(".")
            body = self.formula()
            return Forall(var, ty, body) if tok == "forall" else Exists(var, ty, body)
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok == "top":
            self.take()
            return Top()
        if tok == "bot":
            self.take()
            return Bot()
        start = self.i
        try:
            left = self.term()
            if self.peek() == "=":
                self.take()
                return Eq(left, self.term())
        except ParseError:
            pass
        self.i = start
        if tok == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        name = self.ident()
        args = self.args() if self.peek() == "(" else ()
        return Mem(name, args)

    def args(self) -> tuple:
        self.take("(")
        out = []
        if self.peek() != ")":
            out.append(self.term())
            while self.peek() == ",":
                self.take()
                out.append(self.term())
        self.take(")")
        return tuple(out)

    def term(self):
        if self.peek() == "(":
            self.take()
            left = self.term()
            self.take(",")
            right = self.term()
            self.take(")")
            return Pair(left, right)
        name = self.ident()
        if self.peek() == "(":
            return App(name, self.args())
        return Name(name)

    # types
    def type(self):
        t = self.factor()
        while self.peek() == "*":
            self.take()
            t = TypeProd(t, self.factor())
        return t

    def factor(self):
        t = self.tbase()
        if self.peek() == "^":
            self.take()
            return TypeExp(t, self.factor())
        return t

    def tbase(self):
        if self.peek() == "(":
            self.take()
            t = self.type()
            self.take(")")
            return t
        name = self.ident()
        if self.peek() == "(":
            self.take()
            arg = self.type()
            self.take(")")
            return TypeApp(name, arg)
        return TypeName(name)


def parse(text: str):
    p = _Parser(text)
    f = p.formula()
    if p.peek() is not None:
        raise ParseError(f"trailing input starting at {p.peek()!r}")
    return f


def parse_type(text: str):
    p = _Parser(text)
    t = p.type()
    if p.peek() is not None:
        raise ParseError(f"trailing input starting at {p.peek()!r}")
    return t


def free_vars(f, bound: frozenset = frozenset()) -> set[str]:
    """Names used as bare terms and not bound by a quantifier."""
    if isinstance(f, Name):
        return set() if f.name in bound else {f.name}
    if isinstance(f, App):
        return set().union(*(free_vars(a, bound) for a in f.args)) if f.args else set()
    if isinstance(f, Pair):
        return free_vars(f.left, bound) | free_vars(f.right, bound)
    if isinstance(f, (Top, Bot)):
        return set()
    if isinstance(f, Eq):
        return free_vars(f.left, bound) | free_vars(f.right, bound)
    if isinstance(f, Mem):
        return set().union(*(free_vars(a, bound) for a in f.args)) if f.args else set()
    if isinstance(f, Not):
        return free_vars(f.body, bound)
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body, bound | {f.var})
    return free_vars(f.left, bound) | free_vars(f.right, bound)


def conj(*fs):
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs):
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out
