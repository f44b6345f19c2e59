"""Exception types shared across the package."""


class FelgameError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigError(FelgameError):
    """A parameter set or config file violates a structural invariant."""


class DegenerateDataError(ConfigError):
    """Effective training data size is zero while the error curve diverges."""


class GammaZero(FelgameError):
    """The extortion scale parameter gamma must be nonzero."""


class InfeasiblePoint(FelgameError):
    """A conditional-cooperation entry left [0, 1] for the requested (chi, gamma).

    Attributes
    ----------
    index : int
        1-based outcome index of the worst violation.
    value : float
        The offending probability value.
    """

    def __init__(self, index: int, value: float):
        super().__init__(
            f"strategy entry p_{index} = {value!r} is outside [0, 1]"
        )
        self.index = index
        self.value = value


class InfeasibleChi(FelgameError):
    """No gamma of the requested sign is admissible for this factor."""

    def __init__(self, chi: float):
        super().__init__(f"no admissible gamma for extortion factor {chi}")
        self.chi = chi


class NonErgodic(FelgameError):
    """The joint chain admits more than one stationary distribution."""


class NonPositivePayoff(FelgameError):
    """The replicator update is undefined for non-positive expected payoffs."""


class IdentityViolation(FelgameError):
    """The enforced linear relation between expected utilities failed its gate."""

    def __init__(self, residual: float, tol: float):
        super().__init__(
            f"identity residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )
        self.residual = residual
        self.tol = tol


class RejectionBudgetExceeded(FelgameError):
    """Rejection sampling did not find an admissible config within budget."""

    def __init__(self, draws: int, budget: int):
        super().__init__(
            f"no admissible parameter set after {draws} draws (budget {budget})"
        )
        self.draws = draws
        self.budget = budget
