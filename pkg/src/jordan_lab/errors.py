"""Exception hierarchy shared by all stages.

Each error carries an ``exit_code`` so the CLI can map failures to the
documented process exit status.
"""


class JordanLabError(Exception):
    exit_code = 3


class ValidationError(JordanLabError):
    exit_code = 2


class NumericalError(JordanLabError):
    """Iterative method failed (no convergence, obstruction, ...)."""

    exit_code = 3


class CertificationError(JordanLabError):
    exit_code = 4


class NotUnimodular(ValidationError):
    pass


class NotJordan(ValidationError):
    pass


class Degenerate(ValidationError):
    pass


class FrameUnavailable(ValidationError):
    pass


class IllConditioned(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class SlowConvergence(NumericalError):
    pass


class TruncationBudgetExceeded(NumericalError):
    pass


class ObstructionDetected(NumericalError):
    pass


class IllPosed(NumericalError):
    pass


class DegenerateData(NumericalError):
    pass


class OrientationError(NumericalError):
    pass


class ResolutionFloor(ValidationError):
    pass


class NotDiffeo(CertificationError):
    pass


class CannotCertify(CertificationError):
    def __init__(self, message, worst_point=None, record=None):
        super().__init__(message)
        self.worst_point = worst_point
        self.record = record
