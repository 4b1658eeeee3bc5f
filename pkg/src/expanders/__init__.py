"""Equivariant Lagrangian self-expanders in C^2: shooting, density, linear operator and flow checks."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    ExpanderError,
    IntegrationFailure,
    NotFoundError,
)
from .geom import EquivariantRayPair  # noqa: E402
from .profile import ProfileCurve, ShootingProblem, shoot  # noqa: E402

__all__ = [
    "DomainError",
    "EquivariantRayPair",
    "ExpanderError",
    "IntegrationFailure",
    "NotFoundError",
    "ProfileCurve",
    "ShootingProblem",
    "shoot",
    "__version__",
]
