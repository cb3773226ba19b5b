"""Stochastic attitude estimation on SO(3) with a prescribed performance envelope.

Submodules
----------
so3         skew/vex, distance from identity, exponential map, projection
attitude    quaternion, angle-axis, Rodriguez and Euler conversions
wahba       vector observation sets and static attitude reconstruction
ppf         performance envelope, transformed error and its gain
sensors     ground-truth propagation and sensor synthesis
estimators  semi-direct and direct filters in three forms
harness     experiment configuration, Monte-Carlo runner and outputs
"""

from . import attitude, estimators, harness, ppf, sensors, so3, wahba
from .errors import (
    AttitudeError,
    ConfigInvalid,
    EmptyWindow,
    EnvelopeViolated,
    NearUnstableSet,
)

__version__ = "0.1.0"

__all__ = [
    "AttitudeError",
    "ConfigInvalid",
    "EmptyWindow",
    "EnvelopeViolated",
    "NearUnstableSet",
    "attitude",
    "estimators",
    "harness",
    "ppf",
    "sensors",
    "so3",
    "wahba",
]
