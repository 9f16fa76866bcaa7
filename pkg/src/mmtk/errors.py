"""Exception hierarchy shared by all mmtk modules."""

from __future__ import annotations


class MMTError(Exception):
    """Base class for every error raised by mmtk."""


class UnknownTheory(MMTError):
    pass


class UnknownView(MMTError):
    pass


class UnknownSymbol(MMTError):
    pass


class NotAnObjectOver(MMTError):
    """An object uses symbols that are not accessible to the theory it is used in."""


class CompositionMismatch(MMTError):
    pass


class SignatureMismatch(MMTError):
    pass


class FilteredObject(MMTError):
    """A judgment was asked about an object that contains the filter constant."""


class FuelExhausted(MMTError):
    """The step budget for delta/beta reduction ran out."""


class MissingEta(MMTError):
    pass


class FilteredQuery(MMTError):
    def __init__(self, message: str, symbols: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.symbols = symbols or []


class BadSubstitution(MMTError):
    pass


class BadProof(MMTError):
    pass


class ParseError(MMTError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.bare_message = message


class AmbiguousSymbol(ParseError):
    pass


class UnknownReference(ParseError):
    pass
