"""Equivariant Lagrangian mean curvature flow of profile curves.

A profile gamma moves by (kappa + sin u / r) i T, the mean curvature of the
generated surface.  Steps are explicit Euler with dt <= cfl * ds^2, the end
points stay fixed on the asymptotic rays and the points are redistributed
to uniform arc length after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from . import geom
from .density import DensityQuery, SurfaceMeasure, asymptotic_density, surface_density
from .errors import DomainError, SingularityError, StepRejected
from .geom import EquivariantRayPair
from .profile import DEFAULT_RADIUS, ProfileCurve

DEFAULT_CFL = 0.4
DEFAULT_DS = 0.01
DEFAULT_NECK = 0.05


@dataclass(frozen=True, eq=False)
class FlowState:
    """Profile points (uniform in arc length) at time ``t``."""

    points: np.ndarray
    t: float
    rays: EquivariantRayPair | None = None

    def __post_init__(self):
        p = np.array(self.points, dtype=complex).reshape(-1)
        if p.size < 5:
            raise DomainError("flow state needs at least five points")
        if not self.t >= 0:
            raise DomainError("time must be nonnegative")
        if np.min(np.abs(p)) <= 0:
            raise DomainError("profile touches the origin")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def ds(self) -> float:
        return float(np.mean(np.abs(np.diff(self.points))))

    @property
    def curve(self) -> ProfileCurve:
        return ProfileCurve.from_points(self.points, self.rays)


def resample_uniform(points, n: int | None = None) -> np.ndarray:
    """Redistribute points to equal arc-length spacing along a cubic spline through them."""
    p = np.asarray(points, dtype=complex)
    n = p.size if n is None else n
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(p)))])
    spl = CubicSpline(s, np.column_stack([p.real, p.imag]))
    q = spl(np.linspace(0.0, s[-1], n))
    out = q[:, 0] + 1j * q[:, 1]
    out[0], out[-1] = p[0], p[-1]
    return out


def velocity(points, dt: float = 0.0) -> np.ndarray:
    """Normal velocity (kappa + sin u / r) i T at interior points; zero at the ends.

    With ``dt > 0`` the term sin u / r = Im(conj(gamma) T) / r^2 is divided
    by r^2 + dt instead, the linearly implicit form of a relaxation that is
    stiff near the origin.
    """
    p = np.asarray(points, dtype=complex)
    d1 = (p[2:] - p[:-2]) / 2.0
    d2 = p[2:] - 2 * p[1:-1] + p[:-2]
    speed = np.abs(d1)
    T = d1 / speed
    kappa = (np.conj(d1) * d2).imag / speed**3
    g = p[1:-1]
    forcing = (np.conj(g) * T).imag / (np.abs(g) ** 2 + dt)
    v = np.zeros_like(p)
    v[1:-1] = (kappa + forcing) * 1j * T
    return v


def flow_step(state: FlowState, dt: float, cfl: float = DEFAULT_CFL, r_floor: float = 1e-6) -> FlowState:
    """One explicit Euler step followed by arc-length redistribution."""
    if dt <= 0:
        raise StepRejected("time step must be positive")
    ds = state.ds
    if dt > cfl * ds * ds * (1 + 1e-9):
        raise StepRejected(f"dt={dt:.3e} exceeds the stability bound {cfl} * ds^2 = {cfl * ds * ds:.3e}")
    p = state.points + dt * velocity(state.points, dt)
    if np.min(np.abs(p)) <= r_floor or not np.all(np.isfinite(p)):
        raise SingularityError(f"profile reached the origin at t={state.t + dt:.6g}", state)
    return FlowState(resample_uniform(p), state.t + dt, state.rays)


def _cutoff(t):
    """Smooth step: 1 for t <= 1, 0 for t >= 3."""
    x = np.clip((np.asarray(t, dtype=float) - 1.0) / 2.0, 0.0, 1.0)

    def e(z):
        return np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)

    return e(1 - x) / (e(1 - x) + e(x))


def mollified_cone(rays: EquivariantRayPair, r_min: float = DEFAULT_NECK, ds: float = DEFAULT_DS, radius: float = DEFAULT_RADIUS) -> np.ndarray:
    """Points of the cone corner joined by a hyperbola-like neck at distance r_min from 0.

    The corner is the one turned by ``rays.sweep()``.  In the bisector frame
    the curve is x = cot(a) (|y| + c q(|y| / c)) with c = r_min tan a and
    q(t) = (sqrt(t^2 + 1) - t) * cutoff(t), so it is exactly the pair of rays
    for |y| >= 3c.
    """
    if r_min <= 0:
        raise DomainError("desingularisation radius must be positive")
    if rays.is_plane:
        n = int(round(radius / ds))
        s = (np.arange(-n, n) + 0.5) * ds
        return s * np.exp(1j * rays.phi_plus)
    sigma = rays.sweep()
    a = abs(sigma) / 2
    c = r_min * math.tan(a)
    y_end = radius * math.sin(a)
    y = np.linspace(-y_end, y_end, 40 * int(math.ceil(2 * radius / ds)) + 1)
    t = np.abs(y) / c
    x = (np.abs(y) + c * (np.sqrt(t * t + 1) - t) * _cutoff(t)) / math.tan(a)
    z = x + 1j * y
    if sigma < 0:
        z = np.conj(z)
    z = z * np.exp(1j * (rays.phi_minus + sigma / 2))
    length = np.sum(np.abs(np.diff(z)))
    return resample_uniform(z, int(round(length / ds)) + 1)


@dataclass
class FlowRun:
    state: FlowState
    snapshots: list = field(default_factory=list)
    dt: float = 0.0
    ds: float = 0.0

    def manifest(self) -> dict:
        rays = self.state.rays.to_dict() if self.state.rays is not None else None
        return {"rays": rays, "dt": self.dt, "ds": self.ds, "times": [s.t for s in self.snapshots]}


def evolve(state: FlowState, t_end: float, dt: float | None = None, cfl: float = DEFAULT_CFL, snapshot_times=()) -> FlowRun:
    """Flow ``state`` to time ``t_end``; the last step is shortened to land exactly."""
    ds = state.ds
    dt = cfl * ds * ds if dt is None else dt
    if dt > cfl * ds * ds * (1 + 1e-9):
        raise StepRejected(f"dt={dt:.3e} exceeds the stability bound {cfl * ds * ds:.3e}")
    pending = sorted(float(t) for t in snapshot_times if t <= t_end)
    run = FlowRun(state, [], dt, ds)
    while state.t < t_end - 1e-12:
        while pending and pending[0] <= state.t + 1e-12:
            run.snapshots.append(state)
            pending.pop(0)
        target = pending[0] if pending and pending[0] < t_end else t_end
        # ds shrinks as the flow shortens the curve; keep each step inside the bound
        limit = cfl * 1.25
        step = min(dt, limit * state.ds**2, target - state.t)
        if step <= 1e-15:
            break
        state = flow_step(state, step, limit)
    while pending:
        run.snapshots.append(state)
        pending.pop(0)
    run.state = state
    return run


def run_from_cone(
    rays: EquivariantRayPair,
    t_end: float = 0.5,
    dt: float | None = None,
    desingularization_radius: float = DEFAULT_NECK,
    ds: float = DEFAULT_DS,
    radius: float = DEFAULT_RADIUS,
    cfl: float = DEFAULT_CFL,
    snapshot_times=(),
) -> FlowRun:
    """Flow the mollified cone to ``t_end``; the final state is rescaled to the t = 1/2 slice."""
    if t_end <= 0:
        raise DomainError("end time must be positive")
    pts = mollified_cone(rays, desingularization_radius, ds, radius)
    run = evolve(FlowState(pts, 0.0, rays), t_end, dt, cfl, snapshot_times)
    if not math.isclose(t_end, 0.5):
        c = 1.0 / math.sqrt(2 * t_end)
        run.state = FlowState(run.state.points * c, 0.5, rays)
    return run


# --- comparisons ---------------------------------------------------------------------


def _dense(points, factor):
    p = np.asarray(points, dtype=complex)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(p)))])
    spl = CubicSpline(s, np.column_stack([p.real, p.imag]))
    q = spl(np.linspace(0.0, s[-1], factor * (p.size - 1) + 1))
    return q[:, 0] + 1j * q[:, 1]


def _to_polyline(queries, poly):
    """Distance from each query point to the polyline through ``poly``."""
    tree = cKDTree(np.column_stack([poly.real, poly.imag]))
    _, idx = tree.query(np.column_stack([queries.real, queries.imag]))
    best = np.abs(queries - poly[idx])
    for j0 in (idx - 1, idx):
        j0 = np.clip(j0, 0, poly.size - 2)
        a, b = poly[j0], poly[j0 + 1]
        ab = b - a
        t = np.clip(((queries - a) * np.conj(ab)).real / np.abs(ab) ** 2, 0.0, 1.0)
        best = np.minimum(best, np.abs(queries - (a + t * ab)))
    return best


def hausdorff(a, b, clip_radius: float | None = None, factor: int = 8) -> float:
    """Symmetric Hausdorff distance of two sampled curves, restricted to |z| <= clip_radius.

    Both curves are refined by cubic splines and each point is measured
    against the other curve's polyline.
    """
    A, B = _dense(a, factor), _dense(b, factor)
    qa, qb = A, B
    if clip_radius is not None:
        qa, qb = A[np.abs(A) <= clip_radius], B[np.abs(B) <= clip_radius]
    out = 0.0
    if qa.size:
        out = max(out, float(np.max(_to_polyline(qa, B))))
    if qb.size:
        out = max(out, float(np.max(_to_polyline(qb, A))))
    return out


def expander_points(expander: ProfileCurve, radius: float | None = None) -> np.ndarray:
    g = expander.gamma
    if radius is not None:
        g = g[np.abs(g) <= radius + 1e-12]
    return g


@dataclass(frozen=True)
class SelfSimilarityReport:
    taus: tuple
    defects: tuple

    @property
    def max_defect(self) -> float:
        return max(self.defects)


def self_similarity_check(
    expander: ProfileCurve,
    tau_max: float = 0.25,
    dt: float | None = None,
    cfl: float = DEFAULT_CFL,
    n_checks: int = 5,
    radius: float | None = None,
) -> SelfSimilarityReport:
    """Flow the expander as the t = 1/2 slice and compare with sqrt(1 + 2 tau) * expander."""
    radius = min(expander.r[0], expander.r[-1]) if radius is None else radius
    pts = expander_points(expander, radius)
    start = FlowState(pts, 0.5, expander.rays)
    taus = tuple(float(t) for t in np.linspace(0, tau_max, n_checks + 1)[1:])
    run = evolve(start, 0.5 + tau_max, dt, cfl, [0.5 + t for t in taus])
    defects = []
    for tau, snap in zip(taus, run.snapshots):
        target = pts * math.sqrt(1 + 2 * tau)
        defects.append(hausdorff(snap.points, target, clip_radius=radius - 1.0))
    return SelfSimilarityReport(taus, tuple(defects))


@dataclass(frozen=True)
class MuReport:
    max_abs_mu: float
    n_states: int

    def ok(self, tol: float = 1e-12) -> bool:
        return self.max_abs_mu < tol


def mu_conservation_check(states, n_alpha: int = 16) -> MuReport:
    """max |mu| over the embedded surfaces of a sequence of states."""
    alphas = np.arange(n_alpha) * (2 * np.pi / n_alpha)
    worst = 0.0
    n = 0
    for st in states:
        pts = st.points if isinstance(st, FlowState) else np.asarray(st, dtype=complex)
        F = geom.embed(pts[:, None], alphas[None, :])
        worst = max(worst, float(np.max(np.abs(geom.mu(F)))))
        n += 1
    return MuReport(worst, n)


def density_monotonicity(states, rays: EquivariantRayPair, centers, scales, tol: float = 1e-6) -> float:
    """max of Theta_t(x0, l) - Theta_0(x0, l + t) over flow states with t > 0."""
    worst = -math.inf
    for st in states:
        if st.t <= 0:
            continue
        surf = SurfaceMeasure(profile=st.curve)
        for x0 in centers:
            for l in scales:
                lhs = surface_density(surf, DensityQuery(x0, l + st.t, st.t))
                rhs = asymptotic_density(rays, DensityQuery(x0, l + st.t, 0.0))
                worst = max(worst, lhs - rhs)
    return worst
