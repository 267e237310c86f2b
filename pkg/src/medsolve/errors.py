"""Exception hierarchy shared by all medsolve modules."""


class MedsolveError(Exception):
    """Base class for every error raised by the library."""


class InvalidInput(MedsolveError, ValueError):
    """Malformed game, belief, plan or file contents."""


class DimensionMismatch(InvalidInput):
    pass


class ObedienceViolation(MedsolveError):
    """A selection lies outside the value interval at its posterior."""


class InconsistentPrior(MedsolveError):
    """Outcome rows do not sum to the prior."""


class SolverFailure(MedsolveError):
    """Base class for numerical or internal solver failures."""


class NumericalBreakdown(SolverFailure):
    pass


class InternalError(SolverFailure):
    pass


class PriorOffGridHull(SolverFailure):
    pass


class LevelNotAttainable(SolverFailure):
    pass


class ConstructionFailed(SolverFailure):
    pass


class CrossingNotFound(SolverFailure):
    pass


class NotBinary(InvalidInput):
    pass


class NotSingletonValued(InvalidInput):
    pass


class MissingReceiverValue(InvalidInput):
    pass


class UnknownFixture(InvalidInput):
    pass
