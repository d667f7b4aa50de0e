"""Shared exception hierarchy.

The CLI maps these onto exit codes: ConfigError -> 1, ContractError (and
its input-format subclasses) -> 2. InternalError signals a bug and is
deliberately left uncaught.
"""


class GeocaseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GeocaseError):
    """Bad invocation: missing files, invalid flags, unusable paths."""


class ContractError(GeocaseError):
    """Input data violates a documented format or wiring contract."""


class InternalError(GeocaseError):
    """Inconsistency that can only arise from a bug, not from user input."""
