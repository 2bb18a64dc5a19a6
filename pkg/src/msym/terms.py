"""Expression language for varieties attached to a Severi-Brauer base.

Grammar (whitespace-insensitive)::

    term   := factor { "*" factor }
    factor := "P" | "Proj(" nat ")" | "Dual(" term ")"
            | "Sym^" nat "(" term ")" | "Grass(" nat "," term ")"
            | "M0bar(" term "," nat ")" | "MSB(" nat "," nat "," term ")"
            | "Maps_" nat "(" term "," term ")"
    nat    := decimal digits

``P`` denotes the distinguished base variety of the parsing context, ``*``
is the product of varieties.  Constructors:

* ``Proj(n)`` -- projective n-space.
* ``Dual(X)`` -- the dual of a Severi-Brauer variety.
* ``Sym^d(X)`` -- the d-th symmetric power (``Sym^0`` is a point).
* ``Grass(m, X)`` -- m-dimensional twisted linear subspaces of X; in the
  classical indexing by the number of spanning points this is d = m + 1.
* ``M0bar(X, d)`` -- genus-0 stable maps of degree d to X.
* ``MSB(m, d, X)`` -- maps from m-dimensional Severi-Brauer varieties to X
  pulling the hyperplane class back d-fold (the open stable-maps locus).
* ``Maps_d(Q, P)`` -- degree-d maps between two Severi-Brauer varieties.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb
from typing import Union

from .brauer import BrauerClass, BrauerModel, SeveriBrauer, maps_class
from .errors import ExceptionalCaseError, ParseError, TermValidationError


@dataclass(frozen=True, slots=True)
class Proj:
    """Projective space of dimension n."""

    dim: int


@dataclass(frozen=True, slots=True)
class SB:
    """A concrete Severi-Brauer variety used as a leaf."""

    variety: SeveriBrauer


@dataclass(frozen=True, slots=True)
class Dual:
    arg: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class Sym:
    degree: int
    arg: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class Grass:
    """Twisted linear subspaces of projective dimension ``subspace_dim``."""

    subspace_dim: int
    arg: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class M0bar:
    degree: int
    arg: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class MSB:
    """Severi-Brauer subvariety moduli: sources of dimension ``source_dim``."""

    source_dim: int
    degree: int
    arg: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class Maps:
    degree: int
    source: "VarietyTerm"
    target: "VarietyTerm"


@dataclass(frozen=True, slots=True)
class Product:
    factors: tuple["VarietyTerm", ...]


VarietyTerm = Union[Proj, SB, Dual, Sym, Grass, M0bar, MSB, Maps, Product]


@dataclass(frozen=True, slots=True)
class Context:
    """The distinguished base variety every textual ``P`` refers to."""

    base: SeveriBrauer

    @property
    def model(self) -> BrauerModel:
        return self.base.cls.model

    @classmethod
    def create(cls, order: int, value: int = 1, dim: int | None = None) -> "Context":
        """Context over Z/order with base class ``value``.

        Omitting ``dim`` picks the minimal admissible dimension, index - 1.
        """
        base_cls = BrauerModel(order).cls(value)
        if dim is None:
            dim = base_cls.index - 1
        return cls(SeveriBrauer(base_cls, dim))


# ---------------------------------------------------------------------------
# Severi-Brauer denotation
# ---------------------------------------------------------------------------

def denoted_dim(term: VarietyTerm) -> int | None:
    """Dimension of the Severi-Brauer variety a term denotes, else None.

    Terms denoting Severi-Brauer varieties are Proj, SB, duals of such, and
    spaces of maps between two of them.
    """
    if isinstance(term, Proj):
        return term.dim
    if isinstance(term, SB):
        return term.variety.dim
    if isinstance(term, Dual):
        return denoted_dim(term.arg)
    if isinstance(term, Maps):
        source_dim = denoted_dim(term.source)
        target_dim = denoted_dim(term.target)
        if source_dim is None or target_dim is None:
            return None
        return (target_dim + 1) * comb(source_dim + term.degree, source_dim) - 1
    return None


def as_severi_brauer(term: VarietyTerm, model: BrauerModel) -> SeveriBrauer | None:
    """Resolve a term to the Severi-Brauer variety it denotes, else None."""
    if isinstance(term, Proj):
        return SeveriBrauer(BrauerClass(model, 0), term.dim)
    if isinstance(term, SB):
        return term.variety
    if isinstance(term, Dual):
        inner = as_severi_brauer(term.arg, model)
        return None if inner is None else inner.dual()
    if isinstance(term, Maps):
        source = as_severi_brauer(term.source, model)
        target = as_severi_brauer(term.target, model)
        if source is None or target is None:
            return None
        dim = (target.dim + 1) * comb(source.dim + term.degree, source.dim) - 1
        return SeveriBrauer(maps_class(term.degree, source, target), dim)
    return None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(term: VarietyTerm, ctx: Context) -> VarietyTerm:
    """Check every constructor invariant against the context.

    Returns the term with nested products flattened; raises
    TermValidationError naming the violated rule otherwise.
    """
    model = ctx.model

    def check(t: VarietyTerm) -> VarietyTerm:
        if isinstance(t, Proj):
            return t
        if isinstance(t, SB):
            if t.variety.cls.model != model:
                raise TermValidationError(
                    "SB leaf belongs to a different Brauer model than the context"
                )
            return t
        if isinstance(t, Dual):
            arg = check(t.arg)
            if denoted_dim(arg) is None:
                raise TermValidationError(
                    f"Dual requires a Severi-Brauer variety, got {render(arg)}"
                )
            return Dual(arg)
        if isinstance(t, Sym):
            if t.degree < 0:
                raise TermValidationError(f"Sym requires degree >= 0, got {t.degree}")
            return Sym(t.degree, check(t.arg))
        if isinstance(t, Grass):
            arg = check(t.arg)
            n = denoted_dim(arg)
            if n is None:
                raise TermValidationError(
                    f"Grass requires a Severi-Brauer variety, got {render(arg)}"
                )
            if not 0 <= t.subspace_dim <= n:
                raise TermValidationError(
                    f"Grass({t.subspace_dim}, ...) violates 0 <= m <= {n}"
                    f" for an ambient variety of dimension {n}"
                )
            return Grass(t.subspace_dim, arg)
        if isinstance(t, M0bar):
            if t.degree < 1:
                raise TermValidationError(f"M0bar requires degree >= 1, got {t.degree}")
            arg = check(t.arg)
            n = denoted_dim(arg)
            if n is None:
                raise TermValidationError(
                    f"M0bar requires a Severi-Brauer variety, got {render(arg)}"
                )
            if n < 1:
                raise TermValidationError(
                    "M0bar requires a base of dimension >= 1 (curves must fit in it)"
                )
            return M0bar(t.degree, arg)
        if isinstance(t, MSB):
            if t.degree < 1:
                raise TermValidationError(f"MSB requires degree >= 1, got {t.degree}")
            arg = check(t.arg)
            n = denoted_dim(arg)
            if n is None:
                raise TermValidationError(
                    f"MSB requires a Severi-Brauer variety, got {render(arg)}"
                )
            if not 0 <= t.source_dim <= n:
                raise TermValidationError(
                    f"MSB({t.source_dim}, {t.degree}, ...) violates 0 <= m <= {n}"
                    f" for a target of dimension {n}"
                )
            return MSB(t.source_dim, t.degree, arg)
        if isinstance(t, Maps):
            if t.degree < 1:
                raise TermValidationError(f"Maps requires degree >= 1, got {t.degree}")
            source = check(t.source)
            target = check(t.target)
            if denoted_dim(source) is None or denoted_dim(target) is None:
                raise TermValidationError(
                    "Maps requires Severi-Brauer varieties on both sides"
                )
            # resolving forces the same-model check inside maps_class
            as_severi_brauer(Maps(t.degree, source, target), model)
            return Maps(t.degree, source, target)
        if isinstance(t, Product):
            if not t.factors:
                raise TermValidationError("empty product")
            flat: list[VarietyTerm] = []
            for factor in t.factors:
                checked = check(factor)
                if isinstance(checked, Product):
                    flat.extend(checked.factors)
                else:
                    flat.append(checked)
            return Product(tuple(flat))
        raise TermValidationError(f"unknown term node {t!r}")

    return check(term)


# ---------------------------------------------------------------------------
# Dimension
# ---------------------------------------------------------------------------

def dimension(term: VarietyTerm) -> int:
    """Dimension of the variety a validated term describes.

    Counts: Sym^d multiplies by d; Grass(m, X) has (m+1)(n-m) chart
    parameters; stable maps of degree d to an n-fold have (n+1)(d+1) - 4
    moduli; MSB(m, d, X) has (n+1)*C(m+d, m) section coefficients modulo the
    (m+1)^2 reparametrizations (a section count, validated against the sweep
    oracle rather than quoted from anywhere); Maps keeps the full section
    space projectivized.

    Raises ExceptionalCaseError for degree-2 stable maps to a curve, where
    the automorphism-free locus is empty and the count is degenerate.
    """
    if isinstance(term, Proj):
        return term.dim
    if isinstance(term, SB):
        return term.variety.dim
    if isinstance(term, Dual):
        return dimension(term.arg)
    if isinstance(term, Sym):
        return term.degree * dimension(term.arg)
    if isinstance(term, Grass):
        n = denoted_dim(term.arg)
        m = term.subspace_dim
        return (m + 1) * (n - m)
    if isinstance(term, M0bar):
        n = denoted_dim(term.arg)
        if n == 1 and term.degree == 2:
            raise ExceptionalCaseError(
                "degree-2 stable maps to a curve: every cover has an"
                " involution, so the moduli count is degenerate; the coarse"
                " space is the plane Sym^2 of the base"
            )
        return (n + 1) * (term.degree + 1) - 4
    if isinstance(term, MSB):
        n = denoted_dim(term.arg)
        m, d = term.source_dim, term.degree
        return (n + 1) * comb(m + d, m) - (m + 1) ** 2
    if isinstance(term, Maps):
        return denoted_dim(term)
    if isinstance(term, Product):
        return sum(dimension(f) for f in term.factors)
    raise TypeError(f"not a variety term: {term!r}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def render(term: VarietyTerm) -> str:
    """Canonical text for a term; the inverse of parse on grammar terms.

    SB leaves print as ``P``: the textual language has a single distinguished
    base, so round-tripping is exact precisely for terms whose SB leaves are
    the context's base variety.
    """
    if isinstance(term, Proj):
        return f"Proj({term.dim})"
    if isinstance(term, SB):
        return "P"
    if isinstance(term, Dual):
        return f"Dual({render(term.arg)})"
    if isinstance(term, Sym):
        return f"Sym^{term.degree}({render(term.arg)})"
    if isinstance(term, Grass):
        return f"Grass({term.subspace_dim}, {render(term.arg)})"
    if isinstance(term, M0bar):
        return f"M0bar({render(term.arg)}, {term.degree})"
    if isinstance(term, MSB):
        return f"MSB({term.source_dim}, {term.degree}, {render(term.arg)})"
    if isinstance(term, Maps):
        return f"Maps_{term.degree}({render(term.source)}, {render(term.target)})"
    if isinstance(term, Product):
        return " * ".join(render(f) for f in term.factors)
    raise TypeError(f"not a variety term: {term!r}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"(\d+)|([A-Za-z][A-Za-z0-9]*)|([()*^_,])|(\S)")

_KEYWORDS = ("P", "Proj", "Dual", "Sym", "Grass", "M0bar", "MSB", "Maps")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    for match in _TOKEN.finditer(text):
        number, name, symbol, junk = match.groups()
        pos = match.start()
        if number is not None:
            tokens.append(("nat", number, pos))
        elif name is not None:
            if name not in _KEYWORDS:
                raise ParseError(f"unknown name {name!r}", pos, _KEYWORDS)
            tokens.append(("name", name, pos))
        elif symbol is not None:
            tokens.append((symbol, symbol, pos))
        else:
            raise ParseError(f"unexpected character {junk!r}", pos)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.ctx = ctx

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind: str) -> str:
        token_kind, text, pos = self.tokens[self.pos]
        if token_kind != kind:
            shown = text if text else "end of input"
            raise ParseError(f"unexpected {shown!r}", pos, (kind,))
        self.pos += 1
        return text

    def nat(self) -> int:
        return int(self.take("nat"))

    def term(self) -> VarietyTerm:
        factors = [self.factor()]
        while self.peek()[0] == "*":
            self.take("*")
            factors.append(self.factor())
        if len(factors) == 1:
            return factors[0]
        return Product(tuple(factors))

    def factor(self) -> VarietyTerm:
        kind, text, pos = self.peek()
        if kind != "name":
            shown = text if text else "end of input"
            raise ParseError(f"unexpected {shown!r}", pos, _KEYWORDS)
        self.take("name")
        if text == "P":
            return SB(self.ctx.base)
        if text == "Proj":
            self.take("(")
            n = self.nat()
            self.take(")")
            return Proj(n)
        if text == "Dual":
            self.take("(")
            inner = self.term()
            self.take(")")
            return Dual(inner)
        if text == "Sym":
            self.take("^")
            degree = self.nat()
            self.take("(")
            inner = self.term()
            self.take(")")
            return Sym(degree, inner)
        if text == "Grass":
            self.take("(")
            m = self.nat()
            self.take(",")
            inner = self.term()
            self.take(")")
            return Grass(m, inner)
        if text == "M0bar":
            self.take("(")
            inner = self.term()
            self.take(",")
            degree = self.nat()
            self.take(")")
            return M0bar(degree, inner)
        if text == "MSB":
            self.take("(")
            m = self.nat()
            self.take(",")
            degree = self.nat()
            self.take(",")
            inner = self.term()
            self.take(")")
            return MSB(m, degree, inner)
        if text == "Maps":
            self.take("_")
            degree = self.nat()
            self.take("(")
            source = self.term()
            self.take(",")
            target = self.term()
            self.take(")")
            return Maps(degree, source, target)
        raise ParseError(f"unknown constructor {text!r}", pos, _KEYWORDS)


def parse(text: str, ctx: Context) -> VarietyTerm:
    """Parse and validate an expression against the context."""
    parser = _Parser(text, ctx)
    term = parser.term()
    kind, extra, pos = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {extra!r}", pos, ("*", "end of input"))
    return validate(term, ctx)
