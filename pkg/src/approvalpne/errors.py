"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates the documented contract of an operation."""


class PreconditionError(ContractError):
    """The hypothesis an analysis relies on does not hold for this input."""


class CapacityError(ContractError):
    """The requested exhaustive search exceeds its configured size cap."""


class InvariantViolation(RuntimeError):
    """An internal invariant failed; the rule or an implementation is broken."""


class ConfigError(ValueError):
    """An experiment or generator configuration is infeasible."""


class ParseError(ValueError):
    """Malformed instance text. Carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
