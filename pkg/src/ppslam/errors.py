"""Exception and warning types."""

from __future__ import annotations


class PPSlamError(Exception):
    """Base class for library errors."""


class NonAntisymmetric(PPSlamError, ValueError):
    pass


class NonUnitQuaternion(PPSlamError, ValueError):
    pass


class DegenerateMatrix(PPSlamError, ValueError):
    pass


class SingularLambda(PPSlamError, ArithmeticError):
    pass


class ConfigInvalid(PPSlamError, ValueError):
    pass


class EnvelopeViolation(PPSlamError, ArithmeticError):
    """An error component left its performance envelope.

    ``index`` is the flat (landmark, axis) position of the first offending
    component when known, ``t`` the time of the evaluation.
    """

    def __init__(self, message: str, index: tuple[int, ...] | None = None,
                 t: float | None = None, ratio: float | None = None):
        super().__init__(message)
        self.index = index
        self.t = t
        self.ratio = ratio


class GainConditionWarning(UserWarning):
    """Gains do not satisfy the sufficient condition k_p > k_delta * k_xi * |mu|."""
