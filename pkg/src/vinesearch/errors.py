"""Exception types; the CLI maps each to an exit code."""


class ConfigError(ValueError):
    """Invalid option or argument combination (exit code 2)."""

    exit_code = 2


class DataError(ValueError):
    """Unreadable, malformed or unusable input data (exit code 3)."""

    exit_code = 3


class NumericError(ArithmeticError):
    """Numerical failure during fitting or evaluation (exit code 4)."""

    exit_code = 4
