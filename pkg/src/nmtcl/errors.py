"""Exception and warning types raised by the solvers."""


class NmtclError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveParameter(NmtclError, ValueError):
    pass


class NormViolation(NmtclError, ValueError):
    pass


class NotStrongCoupling(NmtclError, ValueError):
    """Raised where a closed form needs a real Rabi rate (gamma0 > lambda/2)."""


class RegimeViolation(NotStrongCoupling):
    pass


class AtPole(NmtclError, ValueError):
    """A generator was sampled closer to one of its poles than the guard allows."""

    def __init__(self, t, pole):
        super().__init__(f"t={t!r} lies within the pole guard of t*={pole!r}")
        self.t = t
        self.pole = pole


class StepTooLarge(NmtclError, ValueError):
    pass


class DegenerateAmplitude(NmtclError, ValueError):
    pass


class PoleAtGridEnd(NmtclError, ValueError):
    pass


class StepProbabilityOverflow(NmtclError, RuntimeError):
    def __init__(self, t, prob):
        super().__init__(
            f"jump probability {prob:.3g} exceeds the cap at t={t!r} even at the minimum step"
        )
        self.t = t
        self.prob = prob


class EmptyTargetClass(NmtclError, RuntimeError):
    pass


class ProbePastPole(NmtclError, ValueError):
    pass


class GridMismatch(NmtclError, ValueError):
    pass


class PositivityBreach(UserWarning):
    """The propagated state left the set of density matrices.

    Issued as a warning, never raised: it flags a generator used outside its
    range of validity rather than a solver failure.
    """
