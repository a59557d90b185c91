"""
Error hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` and the exit status the
command-line front end maps it to.
"""


class FloquetError(Exception):
    """Base class for toolkit errors."""

    code = "error"
    exit_code = 1

    def __init__(self, detail, **context):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def __str__(self):
        return self.detail


class InvalidInputError(FloquetError):
    code = "invalid-input"
    exit_code = 2


class InvalidPairError(InvalidInputError):
    code = "invalid-pair"


class SingularInputError(InvalidInputError):
    code = "singular-input"


class NumericalError(FloquetError):
    code = "numerical"
    exit_code = 3


class ResonanceError(NumericalError):
    """Raised when a shifted derivative symbol vanishes on a retained mode."""

    code = "resonance"

    def __init__(self, detail, mode=None, **context):
        super().__init__(detail, mode=mode, **context)
        self.mode = mode


class SingularSystemError(NumericalError):
    code = "singular-system"

    def __init__(self, detail, sample=None, **context):
        super().__init__(detail, sample=sample, **context)
        self.sample = sample


class ConvergenceError(NumericalError):
    code = "non-convergence"


class SpuriousModeError(NumericalError):
    code = "spurious-mode"


class ObstructionError(NumericalError):
    code = "obstruction"


class AccuracyError(NumericalError):
    code = "accuracy"


class PoleError(NumericalError):
    code = "pole"


class AbortedTrajectoryError(NumericalError):
    code = "aborted-trajectory"

    def __init__(self, detail, last_state=None, **context):
        super().__init__(detail, **context)
        self.last_state = last_state


class InvariantViolation(FloquetError):
    code = "invariant-violation"
    exit_code = 4
