"""Exception hierarchy for gl3v.

Every error also derives from the nearest builtin so that code catching
ValueError or ArithmeticError keeps working.
"""


class Gl3vError(Exception):
    pass


class PoleError(Gl3vError, ArithmeticError):
    """Argument within the pole epsilon of a pole."""
    pass


class DomainError(Gl3vError, ValueError):
    pass


class ParityError(Gl3vError, ValueError):
    """A function does not have the parity it was declared with."""
    pass


class DivergenceError(Gl3vError, ArithmeticError):
    pass


class ContourError(Gl3vError, ValueError):
    pass


class ConvergenceError(Gl3vError, ArithmeticError):
    pass


class NotInvertibleError(Gl3vError, ArithmeticError):
    pass


class CapExceededError(Gl3vError, ValueError):
    pass


class InsufficientTableError(Gl3vError, ValueError):
    pass


class KernelSingularityError(Gl3vError, ArithmeticError):
    pass


class TruncationBudgetError(Gl3vError, RuntimeError):
    pass


class CacheVersionError(Gl3vError, ValueError):
    pass


class CacheChecksumError(Gl3vError, ValueError):
    pass


class ConfigError(Gl3vError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = "line {0}: {1}".format(lineno, message)
        super().__init__(message)
        self.lineno = lineno


class StageError(Gl3vError, RuntimeError):
    def __init__(self, stage, cause):
        super().__init__("stage '{0}' failed: {1}".format(stage, cause))
        self.stage = stage
        self.cause = cause
