"""Exception hierarchy shared by the solver modules and the CLI."""


class SeqPomdpError(Exception):
    """Base class for all errors raised by this package."""


class ModelValidationError(SeqPomdpError, ValueError):
    """A model violates one or more structural invariants.

    ``violations`` holds every problem found, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ModelFormatError(SeqPomdpError):
    """A model or artifact file could not be read or parsed."""


class IntegrityError(SeqPomdpError):
    """A persisted artifact failed its checksum or belongs to another model."""


class GuardExceeded(SeqPomdpError):
    """A configured size guard (grid, enumeration, exact state space) was hit."""


class DomainError(SeqPomdpError, ValueError):
    """A point lies outside the region on which a table or policy is defined."""


class HorizonExhausted(DomainError):
    """The rejection history already uses up the planning horizon."""
