"""
Custom exceptions for chaoskit
"""

from typing import Any, Optional


class ChaosKitException(Exception):
    """Base chaoskit exception"""
    def __init__(self, message: str = "An error occurred"):
        self.message = message
        super().__init__(self.message)


class DomainError(ChaosKitException):
    """Raised when an argument lies outside the domain of an operation"""
    pass


class NumericError(ChaosKitException):
    """Raised when an evaluator returns a non-finite value"""
    def __init__(self, message: str, pair: Optional[Any] = None):
        self.pair = pair
        super().__init__(message)


class BlowUpError(NumericError):
    """Raised when a time-stepping scheme produces a non-finite state"""
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class DivergenceError(ChaosKitException):
    """Raised when an improper integral does not converge"""
    pass


class SeriesConvergenceError(ChaosKitException):
    """Raised when a series hits its term cap before converging"""
    pass


class ModelLoadError(ChaosKitException):
    """Raised when a model document cannot be turned into a model"""
    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ConfigValidationError(ChaosKitException):
    """Raised when an experiment or simulation config is invalid"""
    pass


class CapacityError(ChaosKitException):
    """Raised when a problem exceeds the configured solver capacity"""
    pass


class ShapeMismatchError(DomainError):
    """Raised when array arguments have incompatible shapes"""
    pass


class ConditioningWarning(UserWarning):
    """Finite-difference step is too small relative to Monte Carlo noise"""
    pass
