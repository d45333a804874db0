"""Shared error types for the workbench."""


class WorkbenchError(Exception):
    """Base class for all structured workbench errors."""


class CapacityError(WorkbenchError):
    """A requested computation exceeds the configured memory/size budget."""


class DomainError(WorkbenchError):
    """Inputs violate an operation's precondition."""


class DegenerateInputError(WorkbenchError):
    """Inputs are formally valid but carry no usable data (e.g. no visits)."""


class EstimatorError(WorkbenchError):
    """An estimator post-condition failed (e.g. monotonicity out of tolerance)."""
