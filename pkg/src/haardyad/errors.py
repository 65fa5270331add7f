"""Exception vocabulary shared across the package."""


class HaardyadError(Exception):
    """Base class for all package errors."""


class ParameterError(HaardyadError, ValueError):
    """An argument violates a documented precondition."""


class RangeError(HaardyadError, ValueError):
    """A level, index, or depth falls outside the representable range."""


class ResourceError(HaardyadError, RuntimeError):
    """An exact enumeration would exceed the configured budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class ConfigError(HaardyadError, ValueError):
    """Invalid experiment configuration (bad name, out-of-range field)."""


class UnsupportedError(HaardyadError, NotImplementedError):
    """A combination of inputs the artifact deliberately does not handle."""
