"""Exception and warning types raised by acfronts."""


class AcfrontsError(Exception):
    """Base class for all library errors."""


class BadInput(AcfrontsError, ValueError):
    """Invalid user input (maps to CLI exit code 3)."""


class NumericFailure(AcfrontsError, RuntimeError):
    """A numerical procedure failed (maps to CLI exit code 2)."""


class NonMonotonePositions(BadInput):
    pass


class UnknownScenario(BadInput):
    pass


class SeparationTooSmall(BadInput):
    pass


class OnBranchCut(BadInput):
    pass


class UnboundedForcing(NumericFailure):
    pass


class QuadratureNotConverged(NumericFailure):
    pass


class DivergentIntegral(NumericFailure):
    pass


class RootNotBracketed(NumericFailure):
    pass


class StepSizeUnderflow(NumericFailure):
    pass


class NewtonDiverged(NumericFailure):
    pass


class ConditionNotSatisfied(NumericFailure):
    pass


class SignConditionFailed(NumericFailure):
    pass


class NotConverged(NumericFailure):
    pass


class NaNDetected(NumericFailure):
    def __init__(self, time, msg=None):
        self.time = time
        super().__init__(msg or f"non-finite values at t = {time:g}")


class AcfrontsWarning(UserWarning):
    pass


class MuOutOfValidity(AcfrontsWarning):
    pass


class OutsideValidityWindow(AcfrontsWarning):
    pass


class ExtrapolationWarning(AcfrontsWarning):
    pass


class UnboundedTopographyWarning(AcfrontsWarning):
    pass
