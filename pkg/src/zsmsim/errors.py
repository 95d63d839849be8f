"""Exception hierarchy shared by every layer of the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


# fabric
class DuplicateDomain(SimError):
    pass


class UnknownChild(SimError):
    pass


class UnknownDomain(SimError):
    pass


class CycleDetected(SimError):
    pass


class ForestViolation(SimError):
    pass


class AccessDenied(SimError):
    pass


class CapabilityNotFound(SimError):
    pass


class NotServiceBased(SimError):
    pass


class CodecMismatch(SimError):
    pass


# slice model
class HintRequired(SimError):
    pass


class EmptyTemplate(SimError):
    pass


class HorizonTooLong(SimError):
    pass


class HorizonTooShort(SimError):
    pass


class InsufficientData(SimError):
    pass


class UnknownTarget(SimError):
    pass


class StaticReinstall(SimError):
    pass


# infrastructure
class ValidationFailed(SimError):
    pass


class Infeasible(SimError):
    pass


class LifecycleViolation(SimError):
    pass


class AlreadyScaling(SimError):
    pass


class CapacityExceeded(SimError):
    pass


class BelowMinimum(SimError):
    pass


# 3GPP management system
class UnknownSubnet(SimError):
    pass


class UnknownSlice(SimError):
    pass


class NotPossible(SimError):
    pass


class NotExposed(AccessDenied):
    """Rejected by exposure governance before reaching the service."""


# closed loop
class NoMgmtInterface(SimError):
    pass


class StaleContext(SimError):
    pass


class StaleModel(SimError):
    pass


class PreconditionFailed(SimError):
    pass


# engine / scenario / verification
class InvariantViolation(SimError):
    pass


class ScenarioSyntaxError(SimError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioValidationError(SimError):
    pass


class MalformedTrace(SimError):
    pass
