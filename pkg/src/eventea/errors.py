"""Shared exception types, mapped to CLI exit codes by the command dispatcher."""


class DataError(Exception):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class DivergenceError(Exception):
    """Non-finite values encountered during optimization (CLI exit code 3)."""
