"""Exception types raised by :mod:`hstvflow`."""


class HSTVError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HSTVError, ValueError):
    """Invalid grid, parameter or input shape."""


class DivergenceError(HSTVError, ArithmeticError):
    """The dual iteration produced non-finite values."""


class ConsistencyError(HSTVError, ArithmeticError):
    """An internal numerical invariant was violated (e.g. a complex residue)."""


class ContractViolation(HSTVError, ValueError):
    """Arguments do not satisfy a documented precondition."""
