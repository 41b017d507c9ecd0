"""Exception hierarchy shared by the numerical modules and the CLI."""


class CdfmError(Exception):
    """Base class for package errors."""


class ValidationError(CdfmError, ValueError):
    """Invalid configuration or input data."""


class NumericalError(CdfmError, RuntimeError):
    """A numerical routine failed (quadrature, sampler, eigen-solver)."""


class QuadratureError(NumericalError):
    pass


class SamplerError(NumericalError):
    pass


class StationarityError(NumericalError):
    pass


class IsolatedNodeError(NumericalError):
    pass
