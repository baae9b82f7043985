"""Exception hierarchy.

Every error that signals a mathematically invalid input or outcome derives
from :class:`DomainError`; the CLI maps those to exit status 2.
"""


class DomainError(ValueError):
    """Input or result outside the class of bodies/measures handled here."""


class HemisphereError(DomainError):
    """Directions are contained in a closed hemisphere."""


class DegenerateBodyError(DomainError):
    """Body has empty interior or does not contain the origin in its interior."""


class NotSupportFunctionError(DomainError):
    """Sampled values fail the curvature check of a support function."""


class SolverError(DomainError):
    """Base for solver outcomes; ``report`` carries the last state when known."""

    def __init__(self, message, report=None, index=None):
        super().__init__(message)
        self.report = report
        self.index = index


class NoConvergence(SolverError):
    pass


class BranchViolation(SolverError):
    pass


class InfeasibleHemisphere(SolverError, HemisphereError):
    pass


class FacetVanished(SolverError):
    pass


class NoRoot(SolverError):
    pass


class NoValidBranch(SolverError):
    def __init__(self, message, roots=(), report=None):
        super().__init__(message, report=report)
        self.roots = tuple(roots)
