"""Brauer-class arithmetic in a finite cyclic model.

The group of Brauer-equivalence classes of the ground field is modeled by a
single cyclic group Z/N, written additively: composing two classes adds their
residues, the dual is negation, and tensor powers are integer multiples.
This is a documented modeling assumption, not a statement about arbitrary
fields: the classification rules implemented here consume only the index,
the period and the tensor arithmetic of one base class, all of which the
cyclic model realizes (for instance by classes in the Brauer group of a
local field, where period and index agree for every class).

By default ``index == period``.  A model may carry an explicit index table
widening some indices; every table entry must satisfy
``period(a) | index(a) | N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

from .errors import InvalidVarietyError, ModelMismatchError


def divisors(n: int) -> list[int]:
    """All positive divisors of n, ascending."""
    if n < 1:
        raise ValueError(f"expected a positive integer, got {n}")
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


@dataclass(frozen=True, slots=True)
class BrauerModel:
    """Cyclic group Z/N housing the Brauer-equivalence classes.

    ``index_table`` optionally overrides the index of selected residues; it
    is stored as a sorted tuple of ``(residue, index)`` pairs so models stay
    hashable.  Residues without an entry fall back to ``index == period``.
    """

    order: int
    index_table: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"group order must be >= 1, got {self.order}")
        if self.index_table is not None:
            table = tuple(sorted((a % self.order, i) for a, i in dict(self.index_table).items()))
            object.__setattr__(self, "index_table", table)
            for residue, index in table:
                period = self.order // gcd(residue, self.order)
                if index % period or self.order % index:
                    raise ValueError(
                        f"index table entry ({residue}: {index}) violates"
                        f" period {period} | index | order {self.order}"
                    )

    @classmethod
    def with_indices(cls, order: int, table) -> "BrauerModel":
        """Build a model from any mapping of residues to indices."""
        return cls(order, tuple(dict(table).items()))

    def cls(self, value: int) -> "BrauerClass":
        return BrauerClass(self, value)

    def classes(self):
        """All N classes of the model, in residue order."""
        return (BrauerClass(self, a) for a in range(self.order))


@dataclass(frozen=True, slots=True)
class BrauerClass:
    """A Brauer-equivalence class: a residue in its model's cyclic group."""

    model: BrauerModel
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.model.order)

    @property
    def period(self) -> int:
        """Order of the class in the group: N / gcd(a, N)."""
        return self.model.order // gcd(self.value, self.model.order)

    @property
    def index(self) -> int:
        """gcd of the degrees of 0-cycles on the associated varieties.

        Equals the period unless the model's index table says otherwise.
        """
        table = self.model.index_table
        if table:
            for residue, index in table:
                if residue == self.value:
                    return index
        return self.period

    @property
    def is_trivial(self) -> bool:
        return self.value == 0

    def compose(self, other: "BrauerClass") -> "BrauerClass":
        """Tensor product of classes: addition of residues."""
        if self.model != other.model:
            raise ModelMismatchError(
                f"cannot compose classes of distinct models "
                f"(orders {self.model.order} and {other.model.order})"
            )
        return BrauerClass(self.model, self.value + other.value)

    def dual(self) -> "BrauerClass":
        """Inverse class; the class of the dual variety."""
        return BrauerClass(self.model, -self.value)

    def power(self, exponent: int) -> "BrauerClass":
        """Tensor power, negative exponents meaning dual powers."""
        return BrauerClass(self.model, exponent * self.value)

    def min_variety(self) -> "SeveriBrauer":
        """The minimal variety in this class, of dimension index - 1."""
        return SeveriBrauer(self, self.index - 1)

    def variety(self, r: int) -> "SeveriBrauer":
        """The unique variety of this class with dimension r*index - 1."""
        if r < 1:
            raise ValueError(f"expected r >= 1, got {r}")
        return SeveriBrauer(self, r * self.index - 1)


@dataclass(frozen=True, slots=True)
class SeveriBrauer:
    """A Severi-Brauer variety: a Brauer class plus an admissible dimension.

    Construction validates the divisibility constraint index | dim + 1, so
    every instance is a legal variety; the minimal admissible dimension is
    index - 1.
    """

    cls: BrauerClass
    dim: int

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError(f"dimension must be >= 0, got {self.dim}")
        if (self.dim + 1) % self.cls.index:
            raise InvalidVarietyError(self.cls.index, self.dim)

    @property
    def index(self) -> int:
        return self.cls.index

    @property
    def is_minimal(self) -> bool:
        return self.dim == self.cls.index - 1

    def dual(self) -> "SeveriBrauer":
        """The dual variety: inverse class, same dimension."""
        return SeveriBrauer(self.cls.dual(), self.dim)


def maps_class(degree: int, source: SeveriBrauer, target: SeveriBrauer) -> BrauerClass:
    """Brauer class of the space of degree-d maps from source to target.

    The moduli space of maps pulling the target's hyperplane class back to
    d times the source's is Brauer-equivalent to dual(source)^d (x) target,
    i.e. the residue -d*q + p.
    """
    if degree < 1:
        raise ValueError(f"expected degree >= 1, got {degree}")
    return source.cls.dual().power(degree).compose(target.cls)


def admits_rational_map(source: SeveriBrauer, target: SeveriBrauer) -> bool:
    """Whether a rational map source -> target exists (Amitsur's criterion).

    True iff the target's class lies in the cyclic subgroup generated by the
    source's class.
    """
    if source.cls.model != target.cls.model:
        raise ModelMismatchError("varieties live in distinct models")
    order = source.cls.model.order
    return target.cls.value % gcd(source.cls.value, order) == 0
