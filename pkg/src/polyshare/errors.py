"""Exception hierarchy for polyshare.

Every error raised on purpose by the library derives from ``PolyshareError``
so callers (and the CLI) can separate protocol failures from bugs.
"""


class PolyshareError(Exception):
    """Base class for all library errors."""


class ConfigError(PolyshareError):
    """Invalid configuration or malformed input data."""


class ProtocolError(PolyshareError):
    """The protocol cannot run with the given parameters."""


class InverseOfZero(PolyshareError, ZeroDivisionError):
    pass


class NotPrime(ConfigError):
    pass


class SingularMatrix(ProtocolError):
    """An evaluation matrix has no inverse (degenerate evaluation points)."""


class AlphaSamplingExhausted(ProtocolError):
    pass


class DimensionMismatch(ConfigError):
    pass


class IndivisibleDimension(ConfigError):
    pass


class IndexOutOfRange(ConfigError, IndexError):
    pass


class BadBasis(ConfigError):
    pass


class NotEnoughShares(ProtocolError):
    pass


class ParamMismatch(ProtocolError):
    pass


class BasisMismatch(ProtocolError):
    pass


class TooFewWorkers(ProtocolError):
    pass


class SubsetTooLarge(ConfigError):
    pass


class ParametersTooLarge(ConfigError):
    pass


class ExpressionSyntaxError(ConfigError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownInput(ConfigError):
    pass
