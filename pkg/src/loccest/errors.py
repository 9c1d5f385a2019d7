"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a structural or numerical precondition."""


class InconsistentMomentsError(ValueError):
    """Power sums do not correspond to any real spectrum."""


class NotPositiveError(ValueError):
    """A map produced a Hermitian output that is not positive semidefinite.

    The offending matrix is kept on ``matrix`` so callers can still inspect
    its spectrum (e.g. a partial transpose).
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class ProtocolError(RuntimeError):
    """Malformed frame, version mismatch or out-of-order message."""


class NotMaximallyCorrelatedError(ValueError):
    pass


class NotBellDiagonalError(ValueError):
    pass
