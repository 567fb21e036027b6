class InvalidArgument(ValueError):
    pass


class InvalidUpdate(ValueError):
    pass


class SizeLimitError(ValueError):
    pass


class InfiniteResistance(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    """A sparsifier handle was asked to follow more piece changes than it was issued for."""


class PhaseExhausted(RuntimeError):
    pass


class DecodeError(ValueError):
    pass
