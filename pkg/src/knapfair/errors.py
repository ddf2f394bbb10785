"""Exception hierarchy shared across the package.

The CLI maps ValidationError/ParameterError to exit code 2 and
ResourceBudgetError to exit code 3.
"""


class KnapfairError(Exception):
    """Base class for all package errors."""


class ValidationError(KnapfairError):
    """Malformed input: bad items, instances, files, or configs."""


class ParameterError(KnapfairError):
    """A policy or bound parameter is outside its admissible range."""


class ResourceBudgetError(KnapfairError):
    """An exact computation would exceed its configured resource budget."""
