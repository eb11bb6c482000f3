"""Exception types shared across modules."""


class DomainError(ValueError):
    """A function was applied outside its domain (e.g. log of a non-positive entry)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergenceError(ArithmeticError):
    """An iteration produced non-finite values."""

    def __init__(self, message, iteration=None, max_rank_seen=None):
        super().__init__(message)
        self.iteration = iteration
        self.max_rank_seen = max_rank_seen
