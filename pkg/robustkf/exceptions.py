class RobustKFError(Exception):
    """Base class for every failure raised by the robustkf library."""

    def __init__(self, message, *, operation=None):
        super().__init__(message)
        self.operation = operation

    def __str__(self):
        message = super().__str__()
        if self.operation:
            return f"{self.operation}: {message}"
        return message


class InputError(RobustKFError):
    """The caller supplied a model or request the library cannot accept."""


class NumericalError(RobustKFError):
    """A recursion or factorization broke down on otherwise valid input."""


# Input errors

class DimensionMismatch(InputError, ValueError):
    pass


class InvalidCovariance(InputError, ValueError):
    pass


class NotReachable(InputError):
    def __init__(self, message, *, report=None, operation='validate'):
        super().__init__(message, operation=operation)
        self.report = report


class NotObservable(InputError):
    def __init__(self, message, *, report=None, operation='validate'):
        super().__init__(message, operation=operation)
        self.report = report


class DegenerateNoise(InputError):
    pass


class BracketInvalid(InputError, ValueError):
    pass


class ScenarioInvalid(InputError):
    pass


# Numerical errors

class NotStable(NumericalError):
    def __init__(self, message, *, radius=None, operation=None):
        super().__init__(message, operation=operation)
        self.radius = radius


class NotPositiveDefinite(NumericalError):
    def __init__(self, message, *, eigenvalue=None, operation=None):
        super().__init__(message, operation=operation)
        self.eigenvalue = eigenvalue


class NearSingular(NumericalError):
    def __init__(self, message, *, context=None, eigenvalue=None, operation=None):
        super().__init__(message, operation=operation)
        self.context = context
        self.eigenvalue = eigenvalue


class OutOfDomain(NumericalError):
    def __init__(self, message, *, t=None, operation=None):
        super().__init__(message, operation=operation)
        self.t = t


class NoConvergence(NumericalError):
    def __init__(self, message, *, iterations=None, last_iterate=None, operation=None):
        super().__init__(message, operation=operation)
        self.iterations = iterations
        self.last_iterate = last_iterate


class Diverged(NumericalError):
    def __init__(self, message, *, t=None, operation=None):
        super().__init__(message, operation=operation)
        self.t = t


class NoRealRoots(NumericalError):
    pass


class NotCertified(NumericalError):
    def __init__(self, message, *, certificate=None, operation=None):
        super().__init__(message, operation=operation)
        self.certificate = certificate
