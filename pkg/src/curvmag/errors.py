"""Exception hierarchy shared by all curvmag modules."""


class CurvmagError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CurvmagError, ValueError):
    """Malformed input: bad configuration, unknown keys, unparsable text."""


class InvalidChartError(ValidationError):
    pass


class DomainError(ValidationError):
    """Argument outside the domain where the quantity is defined."""


class ConfigurationError(CurvmagError):
    """The object lacks data needed by the requested operation."""


class PreconditionError(CurvmagError):
    pass


class SignatureMismatchError(CurvmagError, TypeError):
    """Sphere (+1) and disc (-1) sections were mixed."""


class NormalisabilityError(PreconditionError):
    pass


class QuantisationError(PreconditionError):
    pass


class IdentityError(CurvmagError):
    """An operator identity that must hold exactly failed."""


class DegenerateLevelError(CurvmagError):
    """U - B vanishes or changes sign, so the Laplace transform is undefined."""


class ChainBreakdownError(DegenerateLevelError):
    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class InadmissibleConstantError(PreconditionError):
    pass


class IntegralObstructionError(PreconditionError):
    pass


class NumericalError(CurvmagError):
    """Iterative numerics did not converge."""


class SolverError(NumericalError):
    pass


class IndeterminateKernelError(NumericalError):
    pass


class StagnationError(NumericalError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
