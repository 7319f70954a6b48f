class MofpcaError(Exception):
    """Base class for errors raised by mofpca."""

    exit_code = 1


class InputError(MofpcaError, ValueError):
    exit_code = 2


class ConfigError(MofpcaError, ValueError):
    exit_code = 3


class EnumerationCapError(MofpcaError, ValueError):
    """Raised when an exhaustive enumeration would exceed the configured cap."""

    exit_code = 4
