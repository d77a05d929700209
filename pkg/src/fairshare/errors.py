"""Exception hierarchy shared across the package."""


class FairshareError(Exception):
    """Base class for every error raised by fairshare."""


class ValidationError(FairshareError, ValueError):
    """An instance or schedule violates a structural invariant."""


class EmptyInstance(ValidationError):
    pass


class RowNotNormalized(ValidationError):
    pass


class NegativeDemand(ValidationError):
    pass


class NonPositiveWork(ValidationError):
    pass


class ParseError(FairshareError, ValueError):
    """A JSON document could not be decoded into the expected shape."""


class UnfinishedAgent(FairshareError):
    def __init__(self, agent: int):
        super().__init__(f"agent {agent} does not finish within the given segments")
        self.agent = agent


class NonPositiveCost(FairshareError, ValueError):
    pass


class Singular(FairshareError, ArithmeticError):
    pass


class TieGroupTooLarge(FairshareError):
    pass


class LengthMismatch(FairshareError, ValueError):
    pass


class UnknownFixture(FairshareError, KeyError):
    pass


class NotTwoAgents(FairshareError, ValueError):
    pass
