"""Lagrangian planes, frames and angle bookkeeping in C^2.

Points and tangent vectors of C^2 are complex arrays whose last axis has
length 2, ``z = (z1, z2)`` with ``zj = xj + i yj``.  The real inner product
is ``<u, v> = Re sum(u_j conj(v_j))`` and ``J`` is multiplication by ``i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidFrameError

PI = math.pi
TRANSVERSE_RTOL = 1e-10
FRAME_TOL = 1e-8


def _mod(x: float, period: float) -> float:
    """Reduce into [0, period), folding values within rounding of ``period`` back to 0."""
    y = math.fmod(x, period)
    if y < 0.0:
        y += period
    if period - y <= TRANSVERSE_RTOL * period:
        y = 0.0
    return y


def _near_zero_mod(x: float, period: float) -> bool:
    y = _mod(x, period)
    return min(y, period - y) <= TRANSVERSE_RTOL * period


@dataclass(frozen=True)
class PlanePair:
    """The pair (R^2, diag(e^{i theta1}, e^{i theta2}) R^2).

    Angles are reduced into [0, pi) on construction.  Both must be nonzero
    modulo pi, otherwise the planes share a line.
    """

    theta1: float
    theta2: float

    def __post_init__(self):
        t1 = _mod(float(self.theta1), PI)
        t2 = _mod(float(self.theta2), PI)
        if _near_zero_mod(t1, PI) or _near_zero_mod(t2, PI):
            raise DomainError(
                f"planes are not transverse: theta1={self.theta1!r}, theta2={self.theta2!r}"
            )
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)

    @property
    def angle_sum(self) -> float:
        return self.theta1 + self.theta2

    def frames(self) -> tuple["LagrangianFrame", "LagrangianFrame"]:
        """Orthonormal frames of P1 (the real plane) and P2."""
        return plane_frame(0.0, 0.0), plane_frame(self.theta1, self.theta2)

    def distances(self, x0) -> tuple[float, float]:
        """Euclidean distances from ``x0`` to P1 and P2."""
        x0 = np.asarray(x0, dtype=complex)
        d1 = float(np.linalg.norm(x0.imag))
        rot = x0 * np.exp(-1j * np.array([self.theta1, self.theta2]))
        d2 = float(np.linalg.norm(rot.imag))
        return d1, d2

    def to_json(self) -> str:
        return json.dumps({"theta1": self.theta1, "theta2": self.theta2})

    @classmethod
    def from_json(cls, text: str) -> "PlanePair":
        data = json.loads(text)
        return cls(float(data["theta1"]), float(data["theta2"]))


@dataclass(frozen=True, eq=False)
class LagrangianFrame:
    """Two vectors of C^2 forming an orthonormal real basis of a Lagrangian plane."""

    u: np.ndarray
    v: np.ndarray
    tol: float = FRAME_TOL

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).reshape(2)
        v = np.asarray(self.v, dtype=complex).reshape(2)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        _check_frames(u, v, self.tol)

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])


def _check_frames(u, v, tol):
    nu = np.sum(np.abs(u) ** 2, axis=-1)
    nv = np.sum(np.abs(v) ** 2, axis=-1)
    dot = np.sum(u * np.conj(v), axis=-1)
    err = np.max(
        np.abs(np.stack(np.broadcast_arrays(nu - 1.0, nv - 1.0, dot.real, dot.imag)))
    )
    if not np.isfinite(err) or err > tol:
        # Im <u, v> is omega(v, u): the Lagrangian condition.
        raise InvalidFrameError(f"frame not orthonormal/Lagrangian: defect {err:.3e} > {tol:.1e}")


def plane_frame(theta1: float, theta2: float) -> LagrangianFrame:
    """Frame of diag(e^{i theta1}, e^{i theta2}) R^2."""
    return LagrangianFrame(
        np.array([np.exp(1j * theta1), 0.0]), np.array([0.0, np.exp(1j * theta2)])
    )


def _principal(angle):
    """Map into (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    return np.where(a <= -PI, a + 2 * PI, a)


def lagrangian_angle(frame: LagrangianFrame) -> float:
    """Argument of det[u v], the phase of Omega on the frame, in (-pi, pi]."""
    det = frame.u[0] * frame.v[1] - frame.u[1] * frame.v[0]
    return float(_principal(np.angle(det)))


def lagrangian_angles(u, v, tol: float = FRAME_TOL) -> np.ndarray:
    """Vectorised :func:`lagrangian_angle` for stacks of frames of shape (..., 2)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    _check_frames(u, v, tol)
    det = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return _principal(np.angle(det))


def equivariant_frame(gamma, dgamma, alpha):
    """Unit tangent frame of (gamma cos a, gamma sin a) along s and alpha.

    Works on arrays; returns ``(u, v)`` each of shape (..., 2).
    """
    gamma = np.asarray(gamma, dtype=complex)
    dgamma = np.asarray(dgamma, dtype=complex)
    c, s = np.cos(alpha), np.sin(alpha)
    t = dgamma / np.abs(dgamma)
    n = gamma / np.abs(gamma)
    u = np.stack(np.broadcast_arrays(t * c, t * s), axis=-1)
    v = np.stack(np.broadcast_arrays(-n * s, n * c), axis=-1)
    return u, v


def embed(gamma, alpha) -> np.ndarray:
    """Points (gamma cos alpha, gamma sin alpha) of the equivariant surface."""
    gamma = np.asarray(gamma, dtype=complex)
    return np.stack(np.broadcast_arrays(gamma * np.cos(alpha), gamma * np.sin(alpha)), axis=-1)


def liouville_eval(point, vector):
    """lambda_x(v) = sum_j (x_j dv_{y_j} - y_j dv_{x_j})."""
    p = np.asarray(point, dtype=complex)
    v = np.asarray(vector, dtype=complex)
    out = np.sum(p.real * v.imag - p.imag * v.real, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def mu(point):
    """x1 y2 - x2 y1; vanishes exactly on equivariant surfaces."""
    p = np.asarray(point, dtype=complex)
    out = p[..., 0].real * p[..., 1].imag - p[..., 1].real * p[..., 0].imag
    return float(out) if np.ndim(out) == 0 else out


def area_minimizing_pair(pair: PlanePair) -> bool:
    """True iff theta1 + theta2 is a multiple of pi, i.e. the pair lies in SL."""
    return _near_zero_mod(pair.angle_sum, PI)


def rotation_path(pair: PlanePair, s: float) -> PlanePair:
    """Rotate P2 at constant Lagrangian angle; s = 1 gives equal angles."""
    if area_minimizing_pair(pair):
        raise DomainError("rotation path is only defined off the area-minimizing set")
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"path parameter must lie in [0, 1], got {s!r}")
    shift = s * (pair.theta1 - pair.theta2) / 2.0
    return PlanePair(pair.theta1 - shift, pair.theta2 + shift)


def unwrap_angles(angles, guard: float | None = PI / 2) -> np.ndarray:
    """Nearest-branch continuation of a sampled angle.

    Raises :class:`DomainError` if a continued step still exceeds ``guard``,
    which signals that the sampling is too coarse to follow the branch.
    """
    out = np.unwrap(np.asarray(angles, dtype=float))
    if guard is not None and out.size > 1 and np.max(np.abs(np.diff(out))) >= guard:
        raise DomainError("angle jumps by more than the continuation guard between samples")
    return out


@dataclass(frozen=True)
class EquivariantRayPair:
    """Asymptotic directions of a profile curve: incoming along ``phi_minus``,
    outgoing along ``phi_plus``.

    Since gamma and -gamma generate the same surface, each ray only matters
    as a line through 0, i.e. modulo pi.  Antipodal rays describe a single
    plane; equal rays are rejected.
    """

    phi_minus: float
    phi_plus: float

    def __post_init__(self):
        if _near_zero_mod(self.phi_plus - self.phi_minus, 2 * PI):
            raise DomainError("rays coincide; no transverse plane pair")

    @property
    def is_plane(self) -> bool:
        return _near_zero_mod(self.phi_plus - self.phi_minus, PI)

    @property
    def separation(self) -> float:
        """Angle from the first line to the second, in [0, pi)."""
        return _mod(self.phi_plus - self.phi_minus, PI)

    @property
    def is_area_minimizing(self) -> bool:
        return not self.is_plane and _near_zero_mod(2.0 * self.separation, PI)

    def plane_pair(self) -> PlanePair:
        """The asymptotic planes, rotated so the first is R^2."""
        if self.is_plane:
            raise DomainError("antipodal rays generate a single plane, not a pair")
        d = self.separation
        return PlanePair(d, d)

    def sweep(self) -> float:
        """Signed angle swept by the neck profile, in (-pi/2, pi/2).

        A neck through r0 > 0 turns by strictly less than pi/2, so the
        second line is reached counter-clockwise when the separation is
        below pi/2 and clockwise otherwise.
        """
        if self.is_plane:
            return 0.0
        if self.is_area_minimizing:
            raise DomainError("area-minimizing configuration (angle sum in pi Z)")
        d = self.separation
        return d if d < PI / 2 else d - PI

    def targets(self) -> tuple[float, float]:
        """Representative ray angles (phi_minus, phi_plus') actually joined by the neck."""
        return self.phi_minus, self.phi_minus + self.sweep()

    def reflected(self) -> "EquivariantRayPair":
        return EquivariantRayPair(-self.phi_minus, -self.phi_plus)

    def line_mismatch(self, other: "EquivariantRayPair") -> float:
        """Largest angular distance between corresponding lines (mod pi)."""

        def dist(x, y):
            d = _mod(x - y, PI)
            return min(d, PI - d)

        return max(dist(self.phi_minus, other.phi_minus), dist(self.phi_plus, other.phi_plus))

    def to_dict(self) -> dict:
        return {"phi_minus": self.phi_minus, "phi_plus": self.phi_plus}
