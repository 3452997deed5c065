"""Exception hierarchy shared across the package."""


class MdhpError(Exception):
    """Base class for all errors raised by :mod:`mdhp`."""


class DimensionMismatchError(MdhpError, ValueError):
    """Parameters, events or weights disagree on a dimension."""


class NumericalError(MdhpError, ArithmeticError):
    """A computation produced a non-finite value that cannot be recovered."""


class DegenerateWindowError(MdhpError, ValueError):
    """A window has no usable time range (all timestamps identical)."""


class DatasetError(MdhpError, ValueError):
    """A dataset or parameter dump is malformed, empty or inconsistent."""


class SingleClassError(MdhpError, ValueError):
    """A metric that needs both labels was given only one."""


class ConfigError(MdhpError, ValueError):
    """Invalid configuration values."""
