"""Normalization of variety terms to canonical stable-birational classes.

Every rewrite rule preserves the stable birational class of the term.  The
classes over a fixed base form a gcd monoid: the class of any resolvable
term is a multiset of entries ``(base class c, divisor g)`` with
``g | index(c)`` and ``g < index(c)``; the empty multiset is the class of a
point, i.e. stable rationality.  The canonical representative of an entry
is the Grassmannian of (g-1)-dimensional twisted linear subspaces of the
minimal variety of ``c``.

Rules carry human-auditable citation strings (the table below) stated in
the term language itself; ``i`` denotes the index of the base class and
``per`` its period.  Cases the rules do not cover are reported as
``unresolved`` values, never guessed; the degenerate conic-moduli case is
reported as ``exceptional``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import gcd

from .brauer import BrauerClass, BrauerModel, SeveriBrauer, divisors, maps_class
from .errors import NoCanonicalFormError, NoExpansionError
from .terms import (
    MSB,
    Context,
    Dual,
    Grass,
    M0bar,
    Maps,
    Proj,
    Product,
    SB,
    Sym,
    VarietyTerm,
    as_severi_brauer,
    dimension,
    render,
    validate,
)

RESOLVED = "resolved"
UNRESOLVED = "unresolved"
EXCEPTIONAL = "exceptional"

YES = "yes"
NO = "no"
UNKNOWN = "unknown"

#: rule id -> statement justifying the rewrite, written in the term language.
RULES = {
    "proj-point": "Proj(n) ~s Proj(0): projective space is stably trivial",
    "sb-trivial": "an SB variety with trivial class is a projective space",
    "sb-minimal": "P_r ~b P_min x Proj((r-1)i): every SB variety is stably"
                  " equivalent to the minimal variety of its class",
    "dual-resolve": "Dual(P) is the SB variety of the inverse class",
    "maps-resolve": "Maps_d(Q, P) is the SB variety of class -d*q + p",
    "sym-point": "Sym^0(X) is a point",
    "sym-reduce": "Sym^d(P) ~s Sym^gcd(d, i)(P)",
    "sym-grass": "Sym^d(P) ~b Grass(d-1, P) x Proj(d(d-1)) for d <= dim P + 1",
    "sym-strip": "Sym^d(U x Proj(r)) ~b Sym^d(U) x Proj(rd)",
    "grass-reduce": "Grass(m, P) ~s Grass(gcd(m+1, i) - 1, P)",
    "grass-point": "Grass(0, P) = P",
    "grass-identity": "Grass(i-1, P) ~s Proj(0)",
    "grass-minimal": "Grass(g-1, P) ~s Grass(g-1, P_min) for g | i",
    "m0bar-even": "M0bar(P, 2e) ~s P, save when dim P = e = 1",
    "m0bar-odd": "M0bar(P, 2e+1) ~s Grass(1, P)",
    "msb-period": "MSB(m, d, P) ~s MSB(m, d', P) for d = d' mod (m+1)",
    "msb-line": "MSB(m, d, P) ~s Grass(m, P) for d = 1 mod (m+1)",
    "msb-full": "MSB(m, m+1, P) ~s P when (m+1) | 420",
    "msb-coprime": "MSB(m, d, P) ~s Grass(m, P) when gcd(m+1, d*per) = 1",
    "product-flatten": "products of products flatten",
    "product-single": "a one-factor product is its factor",
    "product-trivial": "X x Proj(n) ~s X",
    "product-merge": "Grass(d-1, P) x Grass(e-1, P) ~s Grass(gcd(d, e)-1, P)",
    "expand-minimal": "P_r ~b P_min x Proj((r-1)i)",
    "expand-sym-grass": "Sym^d(P) ~b Grass(d-1, P) x Proj(d(d-1)) for d <= dim P + 1",
    "expand-sym-strip": "Sym^d(U x Proj(r)) ~b Sym^d(U) x Proj(rd)",
}


# ---------------------------------------------------------------------------
# Stable classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ClassEntry:
    """One gcd-monoid entry: a base class and a proper divisor of its index."""

    base: BrauerClass
    divisor: int


@dataclass(frozen=True, slots=True)
class StableClass:
    """A stable birational class, or a marker for cases left open.

    ``entries`` is the canonical sorted multiset of per-base entries (only
    meaningful when resolved; an empty resolved class means stably rational).
    ``detail`` carries structured data for markers: the reduced
    ``(m, d0, per)`` triple for unresolved subvariety moduli, and
    ``(dim, degree, coarse_divisor)`` for the exceptional conic case.
    """

    entries: tuple[ClassEntry, ...] = ()
    status: str = RESOLVED
    note: str = ""
    detail: tuple[int, ...] = ()

    @classmethod
    def identity(cls) -> "StableClass":
        return cls()

    @classmethod
    def of_entries(cls, pairs) -> "StableClass":
        merged: dict[BrauerClass, int] = {}
        for base, divisor in pairs:
            merged[base] = gcd(merged.get(base, 0), divisor)
        kept = [
            ClassEntry(base, divisor)
            for base, divisor in merged.items()
            if divisor != base.index
        ]
        kept.sort(key=lambda e: e.base.value)
        return cls(tuple(kept))

    @classmethod
    def unresolved(cls, note: str, detail: tuple[int, ...] = ()) -> "StableClass":
        return cls((), UNRESOLVED, note, detail)

    @classmethod
    def exceptional(cls, note: str, detail: tuple[int, ...] = ()) -> "StableClass":
        return cls((), EXCEPTIONAL, note, detail)

    @property
    def is_resolved(self) -> bool:
        return self.status == RESOLVED

    @property
    def is_identity(self) -> bool:
        return self.status == RESOLVED and not self.entries

    def merge(self, other: "StableClass") -> "StableClass":
        """gcd-merge of two classes, the class of the product of varieties."""
        statuses = (self.status, other.status)
        if UNRESOLVED in statuses or EXCEPTIONAL in statuses:
            status = UNRESOLVED if UNRESOLVED in statuses else EXCEPTIONAL
            notes = [n for n in (self.note, other.note) if n]
            return StableClass(
                (), status, "; ".join(notes), self.detail or other.detail
            )
        pairs = [(e.base, e.divisor) for e in self.entries + other.entries]
        return StableClass.of_entries(pairs)

    def describe(self) -> str:
        if self.status != RESOLVED:
            return f"{self.status}: {self.note}"
        if not self.entries:
            return "trivial class"
        parts = ", ".join(f"(base {e.base.value}, divisor {e.divisor})" for e in self.entries)
        return f"class {{{parts}}}"

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "entries": [
                {"base": e.base.value, "divisor": e.divisor, "index": e.base.index}
                for e in self.entries
            ],
            "note": self.note,
            "detail": list(self.detail),
        }


@dataclass(frozen=True, slots=True)
class Step:
    """One rule application: full term before and after."""

    rule: str
    citation: str
    before: VarietyTerm
    after: VarietyTerm


@dataclass(frozen=True, slots=True)
class Derivation:
    steps: tuple[Step, ...] = ()

    def replay(self, start: VarietyTerm) -> VarietyTerm:
        """Check the steps chain from ``start`` and return the final term."""
        current = start
        for step in self.steps:
            if step.before != current:
                raise ValueError(f"derivation broken at rule {step.rule}")
            current = step.after
        return current

    def to_json_list(self) -> list[dict]:
        return [
            {
                "rule": s.rule,
                "citation": s.citation,
                "before": render(s.before),
                "after": render(s.after),
            }
            for s in self.steps
        ]


# ---------------------------------------------------------------------------
# Single-step rules (shared by the traced engine)
# ---------------------------------------------------------------------------

def _entry_shape(t: VarietyTerm) -> tuple[BrauerClass, int] | None:
    """Recognize fully reduced entry terms: SB(min) or Grass(g-1, SB(min))."""
    if isinstance(t, SB):
        v = t.variety
        if not v.cls.is_trivial and v.is_minimal:
            return v.cls, 1
        return None
    if isinstance(t, Grass) and isinstance(t.arg, SB):
        v = t.arg.variety
        g = t.subspace_dim + 1
        if v.is_minimal and 1 < g < v.index and v.index % g == 0:
            return v.cls, g
        return None
    return None


def _entry_term(base: BrauerClass, divisor: int) -> VarietyTerm:
    rep = SB(base.min_variety())
    return rep if divisor == 1 else Grass(divisor - 1, rep)


def _node_step(t: VarietyTerm, model: BrauerModel) -> tuple[str, VarietyTerm] | None:
    """The single applicable rewrite at the root of ``t``, if any."""
    if isinstance(t, Proj):
        if t.dim > 0:
            return "proj-point", Proj(0)
        return None
    if isinstance(t, SB):
        v = t.variety
        if v.cls.is_trivial:
            return "sb-trivial", Proj(v.dim)
        if not v.is_minimal:
            return "sb-minimal", SB(v.cls.min_variety())
        return None
    if isinstance(t, Dual):
        return "dual-resolve", SB(as_severi_brauer(t, model))
    if isinstance(t, Maps):
        return "maps-resolve", SB(as_severi_brauer(t, model))
    if isinstance(t, Sym):
        if t.degree == 0:
            return "sym-point", Proj(0)
        sb = as_severi_brauer(t.arg, model)
        if sb is not None:
            g = gcd(t.degree, sb.index)
            if g < t.degree:
                return "sym-reduce", Sym(g, t.arg)
            return "sym-grass", Grass(t.degree - 1, t.arg)
        if isinstance(t.arg, Product) and len(t.arg.factors) >= 2:
            for pos, factor in enumerate(t.arg.factors):
                if isinstance(factor, Proj):
                    rest = t.arg.factors[:pos] + t.arg.factors[pos + 1:]
                    inner = rest[0] if len(rest) == 1 else Product(rest)
                    return "sym-strip", Product(
                        (Sym(t.degree, inner), Proj(factor.dim * t.degree))
                    )
        return None
    if isinstance(t, Grass):
        sb = as_severi_brauer(t.arg, model)
        m = t.subspace_dim
        g = gcd(m + 1, sb.index)
        if g < m + 1:
            return "grass-reduce", Grass(g - 1, t.arg)
        if m == 0:
            return "grass-point", t.arg
        if m + 1 == sb.index:
            return "grass-identity", Proj(0)
        minimal = sb.cls.min_variety()
        if not (isinstance(t.arg, SB) and t.arg.variety == minimal):
            return "grass-minimal", Grass(m, SB(minimal))
        return None
    if isinstance(t, M0bar):
        sb = as_severi_brauer(t.arg, model)
        if t.degree % 2 == 0:
            if sb.dim == 1 and t.degree == 2:
                return None  # exceptional: reported as a value, not rewritten
            return "m0bar-even", t.arg
        return "m0bar-odd", Grass(1, t.arg)
    if isinstance(t, MSB):
        sb = as_severi_brauer(t.arg, model)
        m, d = t.source_dim, t.degree
        d0 = (d - 1) % (m + 1) + 1
        if d0 != d:
            return "msb-period", MSB(m, d0, t.arg)
        if d0 == 1:
            return "msb-line", Grass(m, t.arg)
        if d0 == m + 1 and 420 % (m + 1) == 0:
            return "msb-full", t.arg
        if gcd(m + 1, d0 * sb.cls.period) == 1:
            return "msb-coprime", Grass(m, t.arg)
        return None
    if isinstance(t, Product):
        factors = t.factors
        if any(isinstance(f, Product) for f in factors):
            flat: list[VarietyTerm] = []
            for f in factors:
                flat.extend(f.factors if isinstance(f, Product) else (f,))
            return "product-flatten", Product(tuple(flat))
        if len(factors) == 1:
            return "product-single", factors[0]
        for pos, f in enumerate(factors):
            if isinstance(f, Proj):
                rest = factors[:pos] + factors[pos + 1:]
                return "product-trivial", rest[0] if len(rest) == 1 else Product(rest)
        shapes = [_entry_shape(f) for f in factors]
        for i in range(len(factors)):
            if shapes[i] is None:
                continue
            for j in range(i + 1, len(factors)):
                if shapes[j] is not None and shapes[j][0] == shapes[i][0]:
                    base = shapes[i][0]
                    merged = _entry_term(base, gcd(shapes[i][1], shapes[j][1]))
                    rest = list(factors)
                    rest[i] = merged
                    del rest[j]
                    return "product-merge", rest[0] if len(rest) == 1 else Product(tuple(rest))
        return None
    raise TypeError(f"not a variety term: {t!r}")


# ---------------------------------------------------------------------------
# Fast normalizer (no trace; optional randomized application order)
# ---------------------------------------------------------------------------

def _norm(t: VarietyTerm, model: BrauerModel, rng: random.Random | None) -> VarietyTerm:
    while True:
        if isinstance(t, Proj):
            return t if t.dim == 0 else Proj(0)
        if isinstance(t, SB):
            v = t.variety
            if v.cls.is_trivial:
                return Proj(0)
            return t if v.is_minimal else SB(v.cls.min_variety())
        if isinstance(t, (Dual, Maps)):
            t = SB(as_severi_brauer(t, model))
            continue
        if isinstance(t, Sym):
            if t.degree == 0:
                return Proj(0)
            arg = t.arg
            if rng is not None and rng.random() < 0.5:
                arg = _norm(arg, model, rng)
            sb = as_severi_brauer(arg, model)
            if sb is None:
                arg = _norm(arg, model, rng)
                sb = as_severi_brauer(arg, model)
                if sb is None:
                    return Sym(t.degree, arg)
            t = Grass(gcd(t.degree, sb.index) - 1, arg)
            continue
        if isinstance(t, Grass):
            sb = as_severi_brauer(t.arg, model)
            m = t.subspace_dim
            g = gcd(m + 1, sb.index)
            if g < m + 1:
                t = Grass(g - 1, t.arg)
                continue
            if m == 0:
                t = t.arg
                continue
            if m + 1 == sb.index:
                return Proj(0)
            minimal = sb.cls.min_variety()
            if isinstance(t.arg, SB) and t.arg.variety == minimal:
                return t
            return Grass(m, SB(minimal))
        if isinstance(t, M0bar):
            sb = as_severi_brauer(t.arg, model)
            if t.degree % 2 == 0:
                if sb.dim == 1 and t.degree == 2:
                    return t
                t = t.arg
                continue
            t = Grass(1, t.arg)
            continue
        if isinstance(t, MSB):
            sb = as_severi_brauer(t.arg, model)
            m, d = t.source_dim, t.degree
            d0 = (d - 1) % (m + 1) + 1
            if d0 == 1:
                t = Grass(m, t.arg)
                continue
            if d0 == m + 1 and 420 % (m + 1) == 0:
                t = t.arg
                continue
            if gcd(m + 1, d0 * sb.cls.period) == 1:
                t = Grass(m, t.arg)
                continue
            return t if d0 == d else MSB(m, d0, t.arg)
        if isinstance(t, Product):
            factors = list(t.factors)
            indices = list(range(len(factors)))
            if rng is not None:
                rng.shuffle(indices)
            for pos in indices:
                factors[pos] = _norm(factors[pos], model, rng)
            flat: list[VarietyTerm] = []
            for f in factors:
                if isinstance(f, Product):
                    flat.extend(f.factors)
                elif not isinstance(f, Proj):
                    flat.append(f)
            out: list[VarietyTerm] = []
            slot_of: dict[BrauerClass, int] = {}
            merged: dict[BrauerClass, int] = {}
            for f in flat:
                shape = _entry_shape(f)
                if shape is None:
                    out.append(f)
                    continue
                base, divisor = shape
                if base in merged:
                    merged[base] = gcd(merged[base], divisor)
                else:
                    merged[base] = divisor
                    slot_of[base] = len(out)
                    out.append(f)  # placeholder, rebuilt below
            for base, slot in slot_of.items():
                out[slot] = _entry_term(base, merged[base])
            if not out:
                return Proj(0)
            if len(out) == 1:
                return out[0]
            return Product(tuple(out))
        raise TypeError(f"not a variety term: {t!r}")


# ---------------------------------------------------------------------------
# Traced normalizer
# ---------------------------------------------------------------------------

def _collect_redexes(t, model, path, out):
    step = _node_step(t, model)
    if step is not None:
        out.append((path, step))
    if isinstance(t, Product):
        for pos, f in enumerate(t.factors):
            _collect_redexes(f, model, path + (pos,), out)
    elif isinstance(t, Sym):
        _collect_redexes(t.arg, model, path + (0,), out)


def _replace(t, path, replacement):
    if not path:
        return replacement
    if isinstance(t, Product):
        factors = list(t.factors)
        factors[path[0]] = _replace(factors[path[0]], path[1:], replacement)
        return Product(tuple(factors))
    if isinstance(t, Sym):
        return Sym(t.degree, _replace(t.arg, path[1:], replacement))
    raise ValueError("invalid rewrite position")

_MAX_STEPS = 100_000


def _normalize_traced(t, model, rng=None):
    steps: list[Step] = []
    for _ in range(_MAX_STEPS):
        redexes: list = []
        _collect_redexes(t, model, (), redexes)
        if not redexes:
            return t, steps
        path, (rule, replacement) = redexes[0] if rng is None else rng.choice(redexes)
        new_t = _replace(t, path, replacement)
        steps.append(Step(rule, RULES[rule], t, new_t))
        t = new_t
    raise RuntimeError("rewriting did not terminate")  # pragma: no cover


# ---------------------------------------------------------------------------
# Reading classes off irreducible terms
# ---------------------------------------------------------------------------

def _read_class(t: VarietyTerm, model: BrauerModel) -> StableClass:
    if isinstance(t, Proj):
        return StableClass.identity()
    shape = _entry_shape(t)
    if shape is not None:
        return StableClass((ClassEntry(*shape),))
    if isinstance(t, M0bar):
        sb = as_severi_brauer(t.arg, model)
        coarse = gcd(2, sb.index)
        return StableClass.exceptional(
            "degree-2 stable maps to a curve: every cover has an involution,"
            " so the class is undetermined at the moduli level; the coarse"
            f" space is the plane Sym^2 of the base, class divisor {coarse}",
            (sb.dim, t.degree, coarse),
        )
    if isinstance(t, MSB):
        sb = as_severi_brauer(t.arg, model)
        per = sb.cls.period
        return StableClass.unresolved(
            f"no classification rule covers MSB(m={t.source_dim},"
            f" d={t.degree} mod {t.source_dim + 1}, per={per})",
            (t.source_dim, t.degree, per),
        )
    if isinstance(t, Sym):
        inner = _read_class(t.arg, model)
        return StableClass.unresolved(
            f"Sym^{t.degree} of {inner.describe()} is not classified",
            inner.detail,
        )
    if isinstance(t, Product):
        result = StableClass.identity()
        for f in t.factors:
            result = result.merge(_read_class(f, model))
        return result
    raise AssertionError(f"unexpected irreducible term {t!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def classify(term: VarietyTerm, ctx: Context, rng: random.Random | None = None) -> StableClass:
    """Stable class of a term, without building a derivation trace.

    Passing ``rng`` randomizes the order in which rules are applied; by
    confluence the result is independent of it (the oracle checks this).
    """
    term = validate(term, ctx)
    return _read_class(_norm(term, ctx.model, rng), ctx.model)


def stable_class(term: VarietyTerm, ctx: Context) -> tuple[StableClass, Derivation]:
    """Stable class together with the full cited derivation trace."""
    term = validate(term, ctx)
    final, steps = _normalize_traced(term, ctx.model)
    return _read_class(final, ctx.model), Derivation(tuple(steps))


def normal_form(term: VarietyTerm, ctx: Context) -> tuple[VarietyTerm, Derivation]:
    """Canonical representative term of the class of ``term``.

    The identity class is Proj(0); the entry (c, g) over the context's base
    class is Grass(g-1, P_min) (the SB term itself for g = 1).  Everything
    else has no single-term representative and raises NoCanonicalFormError.
    """
    term = validate(term, ctx)
    final, steps = _normalize_traced(term, ctx.model)
    cls = _read_class(final, ctx.model)
    if not cls.is_resolved:
        raise NoCanonicalFormError(
            f"no canonical representative: {cls.describe()}", cls
        )
    if len(cls.entries) > 1:
        raise NoCanonicalFormError(
            f"no canonical representative for a multi-base class: {cls.describe()}",
            cls,
        )
    if cls.entries and cls.entries[0].base != ctx.base.cls:
        raise NoCanonicalFormError(
            "no canonical representative: the single entry's base is not the"
            f" context base ({cls.describe()})",
            cls,
        )
    return final, Derivation(tuple(steps))


def is_stably_rational(term: VarietyTerm, ctx: Context) -> str:
    """'yes', 'no' or 'unknown'; yes exactly for the resolved identity class."""
    cls = classify(term, ctx)
    if not cls.is_resolved:
        return UNKNOWN
    return YES if cls.is_identity else NO


def stably_equivalent(t1: VarietyTerm, t2: VarietyTerm, ctx: Context) -> str:
    """Decide stable birational equivalence of two terms.

    Equal resolved multisets are equivalent.  Unequal resolved classes are
    inequivalent when they live over a single common base (distinctness of
    the divisor classes) or when both are single entries over bases of
    coprime indices.  Everything else is unknown.
    """
    c1 = classify(t1, ctx)
    c2 = classify(t2, ctx)
    if not (c1.is_resolved and c2.is_resolved):
        return UNKNOWN
    if c1.entries == c2.entries:
        return YES
    bases = {e.base for e in c1.entries} | {e.base for e in c2.entries}
    if len(bases) <= 1:
        return NO
    if len(c1.entries) == 1 and len(c2.entries) == 1:
        i1 = c1.entries[0].base.index
        i2 = c2.entries[0].base.index
        if gcd(i1, i2) == 1:
            return NO
    return UNKNOWN


def msym_enumerate(ctx: Context) -> list[StableClass]:
    """All classes of the monoid over the context base: one per divisor of i."""
    base = ctx.base.cls
    out = []
    for d in divisors(base.index):
        if d == base.index:
            out.append(StableClass.identity())
        else:
            out.append(StableClass((ClassEntry(base, d),)))
    return out


# ---------------------------------------------------------------------------
# Dimension-preserving expansion
# ---------------------------------------------------------------------------

def _expansion_step(t, model):
    if isinstance(t, SB):
        v = t.variety
        if not v.is_minimal:
            trivial_dim = v.dim - (v.index - 1)
            return "expand-minimal", Product((SB(v.cls.min_variety()), Proj(trivial_dim)))
        return None
    if isinstance(t, Sym):
        if t.degree < 1:
            return None
        sb = as_severi_brauer(t.arg, model)
        if sb is not None:
            if t.degree <= sb.dim + 1:
                return "expand-sym-grass", Product(
                    (Grass(t.degree - 1, t.arg), Proj(t.degree * (t.degree - 1)))
                )
            return None
        if isinstance(t.arg, Product) and len(t.arg.factors) >= 2:
            for pos, factor in enumerate(t.arg.factors):
                if not isinstance(factor, Proj):
                    continue
                rest = t.arg.factors[:pos] + t.arg.factors[pos + 1:]
                inner = rest[0] if len(rest) == 1 else Product(rest)
                try:
                    if dimension(inner) < 1:
                        continue  # the stripped complement must be positive-dimensional
                except Exception:
                    continue
                return "expand-sym-strip", Product(
                    (Sym(t.degree, inner), Proj(factor.dim * t.degree))
                )
        return None
    return None


def _find_expansion(t, model, path):
    step = _expansion_step(t, model)
    if step is not None:
        return path, step
    if isinstance(t, Product):
        for pos, f in enumerate(t.factors):
            found = _find_expansion(f, model, path + (pos,))
            if found is not None:
                return found
    elif isinstance(t, Sym):
        return _find_expansion(t.arg, model, path + (0,))
    return None


def birational_expand(term: VarietyTerm, ctx: Context) -> tuple[VarietyTerm, Derivation]:
    """One dimension-preserving rewrite at the outermost applicable position.

    Raises NoExpansionError when no rule applies (which is an outcome, not a
    failure: most canonical forms are already expansion-free).
    """
    term = validate(term, ctx)
    found = _find_expansion(term, ctx.model, ())
    if found is None:
        raise NoExpansionError(f"no birational rule applies to {render(term)}")
    path, (rule, replacement) = found
    new_term = _replace(term, path, replacement)
    step = Step(rule, RULES[rule], term, new_term)
    return new_term, Derivation((step,))
