"""Exception types shared across the package."""


class IsolabError(Exception):
    """Base class for all isolab errors."""


class InvalidSymbol(IsolabError):
    """An inner-symbol invariant is violated (zero outside the disk, non-unimodular constant, ...)."""


class SingularAtomHit(IsolabError):
    """Boundary evaluation requested at (or too close to) a singular atom angle."""


class SizeMismatch(IsolabError):
    """Operands live on truncations of different sizes."""


class NotAMember(IsolabError):
    """Requested element does not belong to the semigroup."""


class BoundTooSmall(IsolabError):
    """The precomputed membership table is too short for the requested truncation."""


class ProbeExhausted(IsolabError):
    """No certified probe columns remain for the requested computation."""


class UnknownGenerator(IsolabError):
    """A word uses a letter outside the system's alphabet."""


class NotCommuting(IsolabError):
    """Operator fails the shift-commutation precondition of symbol extraction."""


class MonomialSymbol(IsolabError):
    """A non-monomial inner symbol is required here."""
