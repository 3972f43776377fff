"""Exception types raised across the package."""


class NonErgodicChainError(ValueError):
    """The induced Markov chain has no unique stationary distribution."""


class CapacityError(RuntimeError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, required, cap):
        super().__init__(f"enumeration requires {required} items, cap is {cap}")
        self.required = required
        self.cap = cap


class NumericalDegeneracyError(ArithmeticError):
    """A ratio or gradient became non-finite or degenerate."""


class PreconditionError(ValueError):
    """An operation was called on an input outside its contract."""
