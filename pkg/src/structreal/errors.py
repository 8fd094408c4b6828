"""Exception hierarchy shared by every module."""


class StructrealError(Exception):
    """Base class for all errors raised by structreal."""


class InputError(StructrealError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class StructureError(StructrealError):
    """An object violates a required sparsity structure or graph assumption.

    ``details`` carries the machine-readable violation list.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details if details is not None else []


class PreconditionError(StructrealError):
    """An algorithm was called on input outside its domain (e.g. unstable plant)."""


class SolverError(StructrealError):
    """A numerical solve failed (singular operator, non-convergence)."""


class EvaluationError(StructrealError):
    """Transfer-matrix evaluation too close to a pole."""


class WellPosednessError(StructrealError):
    """A feedback interconnection is not well posed."""


class SynthesisError(StructrealError):
    """No controller could be produced; ``report`` holds the diagnosis."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IndeterminateError(StructrealError):
    """A verdict depends on eigenvalues inside the tolerance band around the axis."""

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa
