"""Exception types raised across the package."""


class CrnError(Exception):
    """Base class for all package errors."""


class DomainError(CrnError, ValueError):
    """An argument lies outside the domain of a functional (negative or zero where positivity is required)."""


class NonConvergence(CrnError):
    """An iterative solver failed to reach its tolerance within the iteration budget."""


class NotComplexBalanced(CrnError):
    """The complex-balance residuals could not be driven to zero at the solved point."""


class SupportEnumerationTooLarge(CrnError):
    """Boundary-equilibrium search was asked to enumerate more species supports than the cap allows."""


class StepSizeUnderflow(CrnError):
    """Adaptive time stepping shrank the step below the configured floor."""


class NonFiniteState(CrnError):
    """A simulation produced NaN or infinite values."""


class StepRejected(CrnError):
    """Repeated step rejections in a PDE run (clamped mass budget exhausted or reaction stiffness)."""


class FitError(CrnError, ValueError):
    """A decay-rate fit was requested on data that cannot support it."""


class InfeasibleConstraint(CrnError):
    """No sample satisfied the constraint set within the budget."""
