"""Exception hierarchy shared by every viewkeeper module."""

from __future__ import annotations


class ViewkeeperError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ViewkeeperError):
    """Malformed DDL or view text. Carries the 1-based position of the fault."""

    def __init__(self, message: str, line: int, column: int, source: str | None = None):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{column}: {message}")


class CatalogError(ViewkeeperError):
    """Schema is syntactically fine but semantically invalid."""


class UnknownRelationError(CatalogError):
    pass


class DuplicateNameError(CatalogError):
    pass


class ForeignKeyCycleError(CatalogError):
    pass


class ViewError(ViewkeeperError):
    """A view definition does not validate against its catalog."""


class IntegrityError(ViewkeeperError):
    """A batch would break a key, referential or domain constraint."""


class PlanError(ViewkeeperError):
    """Auxiliary-view plans that do not fit the views or each other."""
