"""Exception types raised by the engine."""


class EngineError(Exception):
    """Base class for all engine failures."""


class OutOfDomain(EngineError):
    pass


class OrderUnsupported(EngineError):
    pass


class SingularMetric(EngineError):
    pass


class DimensionTooSmall(EngineError):
    pass


class KindMismatch(EngineError):
    pass


class NotContact(EngineError):
    pass


class IncompatibleConnection(EngineError):
    pass


class NotSasakiEinstein(EngineError):
    pass


class TauVanishes(EngineError):
    pass


class DegenerateBoundary(EngineError):
    pass


class DegenerateInput(EngineError):
    pass


class DegenerateNu(EngineError):
    pass


class NotAdapted(EngineError):
    pass


class NonTransverseSlice(EngineError):
    pass


class ZeroFiberCoordinate(EngineError):
    pass


class SingularAmbient(EngineError):
    pass


class UnknownScenario(EngineError):
    pass


class UnknownCheck(EngineError):
    pass


class IoFailure(EngineError):
    pass
