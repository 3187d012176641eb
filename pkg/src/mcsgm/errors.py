"""Exception types shared by the library."""


class InvalidArgument(ValueError):
    """An argument is outside the documented domain of an operation."""


class InvalidConfiguration(ValueError):
    """A run or bound configuration violates a theorem precondition."""


class UnsupportedMatrix(ValueError):
    """The transition matrix is numerically defective (no reliable eigenbasis)."""


class ChainNotMixing(ValueError):
    """The chain is reducible or periodic, so lambda(P) reaches 1."""


class Unsupported(ValueError):
    """The operation is not defined for this loss family."""


class OracleNotConverged(RuntimeError):
    """A full-batch reference solver missed its tolerance within budget."""
