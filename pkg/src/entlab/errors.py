"""Exception hierarchy shared by all entlab modules."""


class EntlabError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class NotHermitian(EntlabError, ValueError):
    pass


class NotPSD(EntlabError, ValueError):
    pass


class NoConvergence(EntlabError, ArithmeticError):
    pass


class InvalidDensityMatrix(EntlabError, ValueError):
    pass


class InvalidSpectrum(EntlabError, ValueError):
    pass


class DomainError(EntlabError, ValueError):
    pass


class InvariantViolation(EntlabError, AssertionError):
    """A mathematical property that must hold was observed to fail."""


class QuadratureFailure(EntlabError, ArithmeticError):
    pass


class NotBracketed(EntlabError, ValueError):
    pass
