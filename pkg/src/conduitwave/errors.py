"""Exception hierarchy shared by all modules.

Two broad families: `DomainError` for inputs outside the mathematical domain
(bad parameters, empty existence region, oversized amplitudes) and
`ConvergenceError` for iterations that fail to meet their tolerance.  The CLI
maps these to exit codes 1 and 2 respectively.
"""


class ConduitError(Exception):
    """Base class for all library errors."""


class DomainError(ConduitError, ValueError):
    """Input outside the mathematical domain of an operation."""


class RegionError(DomainError):
    """Parameters outside the existence region for periodic waves."""


class AmplitudeTooLarge(DomainError):
    """Oscillation amplitude too large for the asymptotic expansion."""


class ConvergenceError(ConduitError, RuntimeError):
    """An iterative procedure failed to reach its tolerance."""


class RootNotConverged(ConvergenceError):
    """Bracketed root solve did not meet tolerance within the iteration cap."""


class QuadratureNotConverged(ConvergenceError):
    """Adaptive quadrature refinements kept disagreeing beyond tolerance."""


class OdeNotConverged(ConvergenceError):
    """Profile reconstruction failed to resolve the orbit."""


class EnergyDriftError(ConvergenceError):
    """Reconstructed profile violates the first-integral energy relation."""


class NewtonNotConverged(ConvergenceError):
    """Newton iteration exhausted its iteration cap."""


class SingularJacobian(ConvergenceError):
    """Newton Jacobian is numerically singular."""


class SteppingError(ConvergenceError):
    """A finite-difference stencil left the valid parameter region."""


class EigenSolveError(ConvergenceError):
    """Dense eigenvalue solve failed."""


class IllConditioned(ConvergenceError):
    """Operator matrix too ill-conditioned to trust a linear solve."""


class TrackingAmbiguous(ConvergenceError):
    """Eigenvalue branch matching across Bloch parameters hit a tie."""


class PositivityLost(ConvergenceError):
    """Time-evolved solution left the positive, well-posed regime."""


class SolveError(ConvergenceError):
    """Linear solve inside the time stepper failed."""


class ConditioningWarning(UserWarning):
    """Parameters approach a boundary where results become ill-conditioned."""
