"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

import numpy as np


class AttitudeError(Exception):
    """Base class for all errors raised by ``ppf_attitude``."""


class NotAntiSymmetric(AttitudeError, ValueError):
    pass


class SingularInput(AttitudeError, ValueError):
    pass


class NotARotation(AttitudeError, ValueError):
    pass


class NonUnitAxis(AttitudeError, ValueError):
    pass


class NonUnitQuaternion(AttitudeError, ValueError):
    pass


class HalfTurn(AttitudeError, ValueError):
    """Rodriguez parameters are unbounded at a rotation angle of pi."""


class Collinear(AttitudeError, ValueError):
    pass


class Degenerate(AttitudeError, ValueError):
    pass


class RankDeficient(AttitudeError, ValueError):
    pass


class DegenerateVector(AttitudeError, ValueError):
    pass


class ConfigInvalid(AttitudeError, ValueError):
    pass


class EmptyWindow(AttitudeError, ValueError):
    pass


class _Masked(AttitudeError):
    """Error that may concern only some members of a batched computation.

    ``mask`` is a boolean array over the batch dimensions marking the
    offending members, or ``None`` for unbatched inputs.
    """

    def __init__(self, message: str, mask=None):
        super().__init__(message)
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)


class EnvelopeViolated(_Masked, ValueError):
    """Distance left the open performance envelope (dist / xi >= delta)."""


class NearUnstableSet(_Masked, ValueError):
    """A correction-gain denominator vanished (error close to a half turn)."""
