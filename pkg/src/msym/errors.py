"""Exception types shared across the package."""


class MsymError(Exception):
    """Base class for every error raised by msym."""


class ModelMismatchError(MsymError):
    """Classes from two different Brauer-group models were combined."""


class InvalidVarietyError(MsymError):
    """Severi-Brauer data whose index does not divide dim + 1."""

    def __init__(self, index: int, dim: int):
        self.index = index
        self.dim = dim
        super().__init__(
            f"index {index} does not divide dim + 1 = {dim + 1};"
            f" admissible dimensions are r*{index} - 1"
        )


class ParseError(MsymError):
    """Syntax error, carrying the offset and the tokens that were expected."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class TermValidationError(MsymError):
    """A grammatical term that violates a constructor bound or side condition."""


class ExceptionalCaseError(MsymError):
    """The degenerate conic-moduli count over a one-dimensional base.

    Every degree-2 cover of a curve carries an involution, so the space of
    such stable maps has no dense open locus of automorphism-free maps and the
    naive dimension count does not apply.  The coarse space is the second
    symmetric power, a projective plane.
    """


class NoCanonicalFormError(MsymError):
    """The stable class has no single canonical representative term."""

    def __init__(self, message: str, stable_class):
        self.stable_class = stable_class
        super().__init__(message)


class NoExpansionError(MsymError):
    """No dimension-preserving expansion rule applies to the term."""
