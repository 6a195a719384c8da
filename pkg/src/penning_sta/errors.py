"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class InfeasibleProtocol(DomainError):
    """The requested protocol cannot be realised with real, confining fields."""


class SpeedLimitViolation(InfeasibleProtocol):
    """A field radicand becomes negative somewhere during the ramp.

    Attributes
    ----------
    tau : float
        Dimensionless time ``t/T`` of the most negative radicand sample.
    radicand : float
        Value of the radicand there.
    mu_min_bz, mu_min_confinement : float or None
        Speed-limit bounds of the trajectory, when known.
    """

    def __init__(self, message, tau, radicand, mu_min_bz=None, mu_min_confinement=None):
        super().__init__(message)
        self.tau = tau
        self.radicand = radicand
        self.mu_min_bz = mu_min_bz
        self.mu_min_confinement = mu_min_confinement


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or broke down."""


class SingularityError(NumericalError):
    """Evaluation at a point where the expression is singular (e.g. a node of the amplitude)."""


class ErmakovCollapse(NumericalError):
    """The auxiliary length collapsed towards zero during integration.

    ``last_state`` holds ``(t, ell, ell_prime)`` of the last accepted step.
    """

    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = last_state
