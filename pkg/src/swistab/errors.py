"""Exception hierarchy.

Every error raised by the library derives from :class:`SwistabError`, so the
CLI can map failures to exit codes without inspecting messages.
"""


class SwistabError(Exception):
    """Base class for all library errors."""


class NonSquare(SwistabError, ValueError):
    pass


class NonFinite(SwistabError, ValueError):
    pass


class DimensionMismatch(SwistabError, ValueError):
    pass


class NotSymmetric(SwistabError, ValueError):
    pass


class NotPositiveDefinite(SwistabError, ValueError):
    def __init__(self, min_eig, msg=None):
        self.min_eig = float(min_eig)
        super().__init__(msg or f"matrix is not positive definite (min eigenvalue {self.min_eig:.3e})")


class NotPSD(SwistabError, ValueError):
    def __init__(self, min_eig, msg=None):
        self.min_eig = float(min_eig)
        super().__init__(msg or f"matrix is not positive semidefinite (min eigenvalue {self.min_eig:.3e})")


class NotContractiveWithinBudget(SwistabError):
    def __init__(self, rho, n_max):
        self.rho = float(rho)
        self.n_max = int(n_max)
        super().__init__(f"no power N <= {n_max} contracts (spectral radius {self.rho:.17g})")


class PreconditionFailed(SwistabError, ValueError):
    def __init__(self, which, value):
        self.which = which
        self.value = float(value)
        super().__init__(f"precondition '{which}' failed (measured {self.value:.6e})")


class BudgetExceeded(SwistabError):
    pass


class InvalidLetter(SwistabError, ValueError):
    pass


class WrongDimension(SwistabError, ValueError):
    pass


class WrongAlphabet(SwistabError, ValueError):
    pass


class InvalidCertificate(SwistabError, ValueError):
    pass


class EmptyWord(SwistabError, ValueError):
    pass


class InvalidDistribution(SwistabError, ValueError):
    pass


class InvalidSchedule(SwistabError, ValueError):
    pass


class HorizonZero(SwistabError, ValueError):
    pass


class NotConverged(SwistabError):
    def __init__(self, residual, msg=None):
        self.residual = float(residual)
        super().__init__(msg or f"omega-limit probes did not converge (residual {self.residual:.3e})")


class InconsistentWithDichotomy(SwistabError):
    pass


class ParseError(SwistabError, ValueError):
    pass
