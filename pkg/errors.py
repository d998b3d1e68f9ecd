"""
Custom exception classes for the DAPAMT laboratory.

This module defines a hierarchy of exceptions that provide clear,
actionable error messages for different failure scenarios.
"""

from typing import Sequence


class LabError(Exception):
    """Base exception for all laboratory errors."""
    pass


class ConfigError(LabError):
    """Raised when a configuration file or environment setting is invalid."""
    pass


# ============================================================================
# Autograd Errors
# ============================================================================

class AutogradError(LabError):
    """Base class for failures inside the differentiation engine."""
    pass


class ShapeError(AutogradError):
    """Raised when a primitive receives incompatible operand shapes."""

    def __init__(self, primitive: str, shape_a: Sequence[int], shape_b: Sequence[int]):
        self.primitive = primitive
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        super().__init__(
            f"{primitive}: incompatible shapes {self.shape_a} and {self.shape_b}"
        )


class GraphError(AutogradError):
    """Raised when backward is asked for something the graph cannot provide."""

    def __init__(self, message: str = "Invalid computation graph."):
        super().__init__(message)


class NonFiniteValueError(AutogradError):
    """Raised when a primitive evaluates to NaN or infinity."""

    def __init__(self, primitive: str):
        self.primitive = primitive
        super().__init__(f"{primitive} produced non-finite values")


class GradientCheckError(AutogradError):
    """Raised when a gradient check cannot be evaluated."""

    def __init__(self, message: str = "Loss is not finite at the sampled point."):
        super().__init__(message)


# ============================================================================
# Data Errors
# ============================================================================

class DataError(LabError):
    """Base class for ingestion and dataset failures."""
    pass


class MalformedRowError(DataError):
    """Raised when an input CSV row cannot be parsed."""

    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}, line {line_number}: {reason}")


class EmptyInputError(DataError):
    """Raised when an operation needs at least one value and got none."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(f"{what}: empty input")


class ScalerError(DataError):
    """Raised when a scaler is fit or applied inconsistently."""

    def __init__(self, message: str = "Scaler does not match the data it is applied to."):
        super().__init__(message)


class DatasetFormatError(DataError):
    """Raised when a dataset file cannot be read back."""

    def __init__(self, message: str = "Dataset file is malformed."):
        super().__init__(message)


# ============================================================================
# Model Errors
# ============================================================================

class ModelError(LabError):
    """Base class for model construction failures."""
    pass


class CheckpointError(ModelError):
    """Raised when a checkpoint does not fit the model it is loaded into."""

    def __init__(self, message: str = "Checkpoint is incompatible with the model configuration."):
        super().__init__(message)


class UnknownAblationError(ModelError):
    """Raised when an ablation kind is not recognized."""

    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"Unknown model variant '{kind}'.")


# ============================================================================
# Training Errors
# ============================================================================

class TrainingError(LabError):
    """Base class for optimization failures."""
    pass


class NonFiniteLossError(TrainingError):
    """Raised when a mini-batch produces a NaN or infinite loss."""

    def __init__(self, epoch: int, batch_index: int, value: float):
        self.epoch = epoch
        self.batch_index = batch_index
        self.value = value
        super().__init__(
            f"Non-finite loss {value!r} at epoch {epoch}, batch {batch_index}. "
            f"Training aborted."
        )


class MissingGradientError(TrainingError):
    """Raised when the optimizer finds a parameter without a gradient."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"No gradient for parameter '{name}'.")


# ============================================================================
# Statistics Errors
# ============================================================================

class StatisticsError(LabError):
    """Base class for significance-test failures."""
    pass


class SampleTooSmallError(StatisticsError):
    """Raised when a sample is too small for the requested statistic."""

    def __init__(self, size: int, minimum: int = 2):
        self.size = size
        super().__init__(f"Sample of size {size} is too small (need at least {minimum}).")
