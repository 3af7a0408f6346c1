class CloudburstError(Exception):
    """Base class for all package errors."""


class DomainError(CloudburstError, ValueError):
    """An argument is outside the domain of a cost or rate formula."""


class LookupFailure(CloudburstError, KeyError):
    """A named entity (GPU class, provider, step) does not exist."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ValidationError(CloudburstError):
    """One or more consistency violations; ``errors`` lists all of them."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(CloudburstError):
    """A structured input file could not be parsed. Message carries line/key context."""
