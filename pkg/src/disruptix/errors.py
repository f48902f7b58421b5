class DisruptixError(Exception):
    """Base class for library errors."""

    exit_code = 1


class SchemaError(DisruptixError, ValueError):
    """Malformed input files, unknown keys, or inconsistent configuration."""

    exit_code = 4


class NumericError(DisruptixError, ArithmeticError):
    """A computation cannot proceed (e.g. too few observations to fit)."""

    exit_code = 5
