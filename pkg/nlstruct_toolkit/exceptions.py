"""
Exceptions for the toolkit.
"""
from typing import Any, List, Optional


class NLStructException(Exception):
    """Base exception for the toolkit."""
    error_code = 6100
    message = "An error occurred in the structured prediction toolkit."

    def __init__(self, message=None):
        self.message = message or self.message
        super().__init__(self.message)


class StructuralException(NLStructException):
    """Exception raised when shapes, layouts, labels or block names do not fit together."""
    error_code = 6101
    message = "Structural mismatch."


class NumericalFailureException(NLStructException):
    """Exception raised when a computation produces non-finite values."""
    error_code = 6102
    message = "Numerical failure."

    def __init__(self, message=None, trace: Optional[List[Any]] = None,
                 iteration: Optional[int] = None, example_id: Optional[int] = None,
                 last_good: Any = None):
        self.trace = trace or []
        self.iteration = iteration
        self.example_id = example_id
        # parameters from before the failing update, when raised during training
        self.last_good = last_good
        super().__init__(message)


class ConfigurationException(NLStructException):
    """Exception raised when a run configuration is malformed."""
    error_code = 6103
    message = "Malformed configuration."

    def __init__(self, message=None, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class ArtifactIOException(NLStructException):
    """Exception raised when a dataset or checkpoint file is missing or corrupt."""
    error_code = 6104
    message = "Failed to read or write an artifact."
