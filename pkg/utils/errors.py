"""Exception hierarchy shared by every package; each error carries its CLI exit code."""


class Oct2ConfocalError(Exception):
    """Base class for all contract violations raised by this project."""
    exit_code = 1
    kind = 'error'


class ConfigError(Oct2ConfocalError):
    """Invalid or inconsistent configuration."""
    exit_code = 2
    kind = 'config'


class DataError(Oct2ConfocalError):
    """Malformed input data: shapes, domains, value ranges, file layout."""
    exit_code = 3
    kind = 'data'


class NumericError(Oct2ConfocalError):
    """Non-finite values produced during training or evaluation."""
    exit_code = 4
    kind = 'numeric'
