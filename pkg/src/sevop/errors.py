"""Exception types shared across the package."""


class SevopError(Exception):
    """Base class for all package-specific failures."""


class NearSingular(SevopError):
    """A shifted matrix is too close to the spectrum for a meaningful solve."""

    def __init__(self, lam, cond_est, msg=None):
        self.lam = lam
        self.cond_est = cond_est
        super().__init__(msg or f"resolvent at lambda={lam} has condition estimate {cond_est:.3e}")


class EigenFailure(SevopError):
    """The eigenvalue solver did not converge."""


class QuadratureDivergence(SevopError):
    """Contour/ray truncation error estimate exceeds the tolerance."""


class DivergentTail(SevopError):
    """The time integral for a fractional power does not converge."""


class DomainError(SevopError):
    """A time argument lies outside the family's domain (0, T]."""


class EmptyGrid(SevopError):
    """A sweep received an empty sampling grid."""


class StepperStall(SevopError):
    """The ODE stepper underflowed its step size near the singularity."""


class KernelBlowup(SevopError):
    """Volterra kernel norm exceeds the hypothesis-predicted envelope."""


class NoContraction(SevopError):
    """The fixed-point iteration fails to contract (delta too large vs s)."""


class MissingBlock(SevopError):
    """An evolution grid lacks a required (i, j) block."""


class DegenerateMesh(SevopError):
    """A mesh with fewer than two points cannot carry a seminorm."""


class InterpolationOutOfRange(SevopError):
    """A pull-back sample point lies outside the computed wedge."""
