"""Equivariant self-expanders as solutions of an ODE for the profile curve.

The surface generated by a planar curve gamma = r e^{i phi} is
``{(gamma cos a, gamma sin a)}``.  With arc length s and psi = arg gamma'
(u = psi - phi) the condition H = x^perp becomes

    r'   = cos u
    phi' = sin u / r
    psi' = -(r + 1/r) sin u

The first two lines only say that s is arc length.  The third follows from
H = (psi' + sin u / r) nu and x^perp = -r sin u nu with nu = i gamma'.
:func:`residual_selfexpander` checks it independently on the embedded
surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.integrate import cumulative_simpson

from .errors import (
    DomainError,
    InsufficientDataError,
    IntegrationFailure,
    NotFoundError,
    NumericalDegeneracyError,
)
from .geom import EquivariantRayPair

DEFAULT_RADIUS = 6.0
DEFAULT_STEP = 0.01


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Arc-length samples (s, r, phi, psi) of a profile curve."""

    s: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    rays: EquivariantRayPair | None = None

    def __post_init__(self):
        arrays = [np.array(a, dtype=float).reshape(-1) for a in (self.s, self.r, self.phi, self.psi)]
        n = arrays[0].size
        if n < 2 or any(a.size != n for a in arrays):
            raise DomainError("profile needs at least two samples of equal length arrays")
        if not np.all(np.isfinite(np.concatenate(arrays))):
            raise DomainError("profile contains non-finite values")
        if np.any(np.diff(arrays[0]) <= 0):
            raise DomainError("arc length must be strictly increasing")
        if np.any(arrays[1] <= 0):
            raise DomainError("profile touches the origin (r <= 0)")
        for name, a in zip(("s", "r", "phi", "psi"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.s.size

    @property
    def s_min(self) -> float:
        return float(self.s[0])

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.s)))

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.s)
        return bool(np.max(np.abs(d - d.mean())) <= 1e-9 * max(1.0, d.mean()))

    @property
    def gamma(self) -> np.ndarray:
        return self.r * np.exp(1j * self.phi)

    @property
    def tangent(self) -> np.ndarray:
        return np.exp(1j * self.psi)

    @property
    def u(self) -> np.ndarray:
        return self.psi - self.phi

    def scaled(self, c: float) -> "ProfileCurve":
        """The profile of c * L (not an expander unless c = 1)."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return ProfileCurve(self.s * c, self.r * c, self.phi, self.psi, self.rays)

    def reflected(self) -> "ProfileCurve":
        """Complex conjugate profile."""
        rays = self.rays.reflected() if self.rays is not None else None
        return ProfileCurve(self.s, self.r, -self.phi, -self.psi, rays)

    def reversed(self) -> "ProfileCurve":
        """Same curve traversed backwards."""
        rays = None
        if self.rays is not None:
            rays = EquivariantRayPair(self.rays.phi_plus, self.rays.phi_minus)
        return ProfileCurve(-self.s[::-1], self.r[::-1], self.phi[::-1], self.psi[::-1] + np.pi, rays)

    def rotated(self, angle: float) -> "ProfileCurve":
        rays = None
        if self.rays is not None:
            rays = EquivariantRayPair(self.rays.phi_minus + angle, self.rays.phi_plus + angle)
        return ProfileCurve(self.s, self.r, self.phi + angle, self.psi + angle, rays)

    def origin_crossings(self) -> np.ndarray:
        """Indices i such that the curve passes through 0 between samples i and i+1.

        Detected as a jump of phi by more than pi/4 across a gap comparable
        to the sampling step (a line or a cone sampled off its vertex).
        """
        jump = np.abs(np.angle(np.exp(1j * np.diff(self.phi))))
        near = np.minimum(self.r[:-1], self.r[1:]) <= np.diff(self.s)
        return np.nonzero((jump > np.pi / 4) & near)[0]

    def check_invariants(self) -> dict:
        """Discrete defects of the arc-length and compatibility relations."""
        g = self.gamma
        ds = np.diff(self.s)
        chord = np.abs(np.diff(g))
        mid_u = 0.5 * (self.u[1:] + self.u[:-1])
        dr = np.diff(self.r) / ds
        mask = np.ones(ds.size, bool)
        mask[self.origin_crossings()] = False
        out = {
            "arc_length": float(np.max(np.abs(chord - ds)[mask])) if mask.any() else 0.0,
            "r_prime": float(np.max(np.abs(dr - np.cos(mid_u))[mask])) if mask.any() else 0.0,
        }
        dphi = np.diff(self.phi) / ds
        rmid = 0.5 * (self.r[1:] + self.r[:-1])
        out["phi_prime"] = float(np.max(np.abs(rmid * dphi - np.sin(mid_u))[mask])) if mask.any() else 0.0
        return out

    @classmethod
    def from_points(cls, gamma, rays=None) -> "ProfileCurve":
        """Build a profile from points of a curve in C (chord-length s)."""
        gamma = np.asarray(gamma, dtype=complex)
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(gamma)))])
        t = np.gradient(gamma, s)
        phi = np.unwrap(np.angle(gamma))
        psi = np.unwrap(np.angle(t))
        return cls(s - s[np.argmin(np.abs(gamma))], np.abs(gamma), phi, psi, rays)


def ode_rhs(state):
    """Right-hand side (r', phi', psi') of the expander ODE in arc length."""
    r, phi, psi = (np.asarray(x, dtype=float) for x in state)
    if np.any(r <= 0):
        raise DomainError("ode_rhs requires r > 0")
    su = np.sin(psi - phi)
    out = np.array([np.cos(psi - phi), su / r, -(r + 1.0 / r) * su])
    return out


def _f(r, p, q):
    u = q - p
    su = math.sin(u)
    return math.cos(u), su / r, -(r + 1.0 / r) * su


def _rk4(y, h):
    r, p, q = y
    k1 = _f(r, p, q)
    k2 = _f(r + 0.5 * h * k1[0], p + 0.5 * h * k1[1], q + 0.5 * h * k1[2])
    k3 = _f(r + 0.5 * h * k2[0], p + 0.5 * h * k2[1], q + 0.5 * h * k2[2])
    k4 = _f(r + h * k3[0], p + h * k3[1], q + h * k3[2])
    w = h / 6.0
    return (
        r + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        p + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        q + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


class _Blowup(Exception):
    def __init__(self, reason):
        self.reason = reason


def _advance(y, h, tol, depth, r_floor):
    """One output step of RK4, bisected until the step-doubling estimate meets tol."""
    try:
        full = _rk4(y, h)
        half = _rk4(_rk4(y, 0.5 * h), 0.5 * h)
    except ZeroDivisionError:
        raise _Blowup("origin") from None
    if min(full[0], half[0]) <= r_floor:
        if depth == 0:
            raise _Blowup("origin")
        return _advance2(y, h, tol, depth, r_floor)
    err = max(abs(a - b) for a, b in zip(full, half)) * (16.0 / 15.0)
    if not math.isfinite(err):
        raise _Blowup("curvature")
    if err <= tol:
        return full
    if depth == 0:
        raise _Blowup("step")
    return _advance2(y, h, tol, depth, r_floor)


def _advance2(y, h, tol, depth, r_floor):
    mid = _advance(y, 0.5 * h, tol, depth - 1, r_floor)
    return _advance(mid, 0.5 * h, tol, depth - 1, r_floor)


def integrate(
    start,
    length: float,
    step: float = DEFAULT_STEP,
    *,
    s0: float = 0.0,
    tol: float = 1e-9,
    stop_radius: float | None = None,
    r_floor: float = 1e-9,
    max_curvature: float = 1e8,
    max_depth: int = 16,
) -> ProfileCurve:
    """Integrate the expander ODE from ``start = (r, phi, psi)`` over ``length``.

    Output samples are spaced by ``step`` in arc length (negative ``length``
    integrates backwards).  Each output step is classical RK4; it is split in
    halves while the step-doubling error estimate exceeds ``tol``, so with a
    loose ``tol`` the scheme is plain fixed-step RK4.

    Integration stops early once ``r >= stop_radius`` (when given).  Reaching
    the origin or unbounded curvature raises :class:`IntegrationFailure`
    carrying the partial curve.
    """
    r, p, q = (float(x) for x in start)
    if r <= 0:
        raise DomainError("start radius must be positive")
    if step <= 0:
        raise DomainError("step must be positive")
    direction = 1.0 if length >= 0 else -1.0
    n_full = int(math.floor(abs(length) / step + 1e-9))
    remainder = abs(length) - n_full * step
    hs = [direction * step] * n_full
    if remainder > 1e-12 * step:
        hs.append(direction * remainder)

    ss = [s0]
    ys = [(r, p, q)]
    y = (r, p, q)
    s = s0
    failure = None
    for h in hs:
        try:
            y = _advance(y, h, tol, max_depth, r_floor)
        except _Blowup as exc:
            failure = exc.reason
            break
        s += h
        if abs(_f(*y)[2]) > max_curvature:
            failure = "curvature"
            break
        ss.append(s)
        ys.append(y)
        if stop_radius is not None and y[0] >= stop_radius:
            break

    arr = np.array(ys)
    ss = np.array(ss)
    if direction < 0:
        arr, ss = arr[::-1], ss[::-1]
    curve = None
    if len(ss) >= 2:
        curve = ProfileCurve(ss, arr[:, 0], arr[:, 1], arr[:, 2])
    if failure is not None:
        raise IntegrationFailure(f"integration stopped at s={s:.6g}: {failure}", curve, failure)
    return curve


def _tail_correction(r, u):
    """Remaining turn of phi beyond a sample, from the linearised tail u ~ exp(-r^2/2)."""
    return math.sin(u) / (r * r + 2.0)


def asymptotic_angles(curve: ProfileCurve, min_radius: float = 3.0) -> EquivariantRayPair:
    """Limiting values of phi at both ends of ``curve``.

    The end values of phi are extrapolated with the tail of the linearised
    equation, which is accurate to the size of u^2 at the truncation radius.
    """
    if curve.r[0] < min_radius or curve.r[-1] < min_radius:
        raise InsufficientDataError(
            f"curve ends at radii {curve.r[0]:.3g}, {curve.r[-1]:.3g}; need >= {min_radius}"
        )
    u = curve.u
    phi_minus = curve.phi[0] - _tail_correction(curve.r[0], u[0])
    phi_plus = curve.phi[-1] + _tail_correction(curve.r[-1], u[-1])
    return EquivariantRayPair(float(phi_minus), float(phi_plus))


def straight_line(phi0: float, radius: float = DEFAULT_RADIUS, step: float = DEFAULT_STEP) -> ProfileCurve:
    """The line through 0 with outgoing direction phi0, sampled off the origin."""
    n = int(round(radius / step))
    s = (np.arange(-n, n) + 0.5) * step
    r = np.abs(s)
    phi = np.where(s < 0, phi0 - np.pi, phi0)
    psi = np.full_like(s, phi0)
    return ProfileCurve(s, r, phi, psi, EquivariantRayPair(phi0 - np.pi, phi0))


def cone_profile(rays: EquivariantRayPair, radius: float = DEFAULT_RADIUS, step: float = DEFAULT_STEP):
    """Two rays meeting at 0 (the pair of asymptotic planes), sampled off the origin."""
    a, b = rays.targets() if not rays.is_area_minimizing else (rays.phi_minus, rays.phi_plus)
    n = int(round(radius / step))
    s = (np.arange(-n, n) + 0.5) * step
    r = np.abs(s)
    phi = np.where(s < 0, a, b)
    psi = np.where(s < 0, a + np.pi, b)
    return ProfileCurve(s, r, phi, psi, rays)


@dataclass(frozen=True)
class ShootingProblem:
    """Data for constructing the expander with given asymptotic rays.

    The neck is parametrised by its radius r0 at the closest point to 0,
    where psi - phi = +-pi/2.  ``r0_bracket`` is the sweep interval for r0.
    """

    rays: EquivariantRayPair
    r0_bracket: tuple[float, float] = (1e-3, 20.0)
    tolerance: float = 1e-10
    radius: float = DEFAULT_RADIUS
    step: float = DEFAULT_STEP
    method: str = "symmetric"
    n_sweep: int = 48

    def __post_init__(self):
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")
        lo, hi = self.r0_bracket
        if not 0 < lo < hi:
            raise DomainError("r0 bracket must satisfy 0 < lo < hi")
        if self.method not in ("symmetric", "two-sided"):
            raise DomainError(f"unknown shooting method {self.method!r}")


def _half_curve(r0, phi0, orient, problem, forward=True, step=None):
    step = problem.step if step is None else step
    stop = max(problem.radius, r0 + 4.0)
    length = 10.0 * stop + 10.0
    return integrate(
        (r0, phi0, phi0 + orient * np.pi / 2),
        length if forward else -length,
        step,
        stop_radius=stop,
        tol=problem.tolerance * 1e-1,
    )


def half_sweep(r0: float, problem: ShootingProblem) -> float:
    """Angle swept by phi from the neck at radius r0 to the outgoing ray."""
    c = _half_curve(r0, 0.0, 1.0, problem)
    return float(c.phi[-1] + _tail_correction(c.r[-1], c.u[-1]))


def mismatch_sweep(problem: ShootingProblem) -> list[tuple[float, float]]:
    """Samples (r0, 2 * half_sweep(r0) - |target sweep|) over the bracket."""
    target = abs(problem.rays.sweep())
    lo, hi = problem.r0_bracket
    trace = []
    for r0 in np.geomspace(lo, hi, problem.n_sweep):
        trace.append((float(r0), 2.0 * half_sweep(float(r0), problem) - target))
    return trace


def _assemble(backward: ProfileCurve, forward: ProfileCurve, rays) -> ProfileCurve:
    return ProfileCurve(
        np.concatenate([backward.s[:-1], forward.s]),
        np.concatenate([backward.r[:-1], forward.r]),
        np.concatenate([backward.phi[:-1], forward.phi]),
        np.concatenate([backward.psi[:-1], forward.psi]),
        rays,
    )


def _trim(curve: ProfileCurve, radius: float) -> ProfileCurve:
    """Drop samples beyond the first crossing of ``radius`` at each end."""
    idx = np.nonzero(curve.r <= radius + 1e-12)[0]
    if idx.size == 0:
        return curve
    lo = max(idx[0] - 1, 0)
    hi = min(idx[-1] + 1, len(curve) - 1)
    sl = slice(lo, hi + 1)
    return ProfileCurve(curve.s[sl], curve.r[sl], curve.phi[sl], curve.psi[sl], curve.rays)


def shoot(problem: ShootingProblem) -> ProfileCurve:
    """The equivariant expander asymptotic to ``problem.rays``.

    Antipodal rays give the straight line through 0.  Otherwise the neck
    radius is found by a sweep for a sign change of the asymptotic-angle
    mismatch followed by Brent's method; with ``method="two-sided"`` the neck
    radius and neck direction are solved for jointly from both ends.
    """
    rays = problem.rays
    if rays.is_plane:
        return straight_line(rays.phi_plus, problem.radius, problem.step)
    sigma = rays.sweep()  # raises DomainError in the area-minimizing case
    target = abs(sigma)
    orient = 1.0 if sigma > 0 else -1.0
    phi_a, phi_b = rays.targets()

    trace = mismatch_sweep(problem)
    changes = [i for i in range(len(trace) - 1) if trace[i][1] * trace[i + 1][1] <= 0]
    if not changes:
        raise NotFoundError(f"no sign change of the mismatch in r0 in {problem.r0_bracket}", trace)
    i = changes[0]
    r0 = optimize.brentq(
        lambda x: 2.0 * half_sweep(x, problem) - target,
        trace[i][0],
        trace[i + 1][0],
        xtol=1e-14,
        rtol=1e-14,
    )
    phi_n = phi_a + sigma / 2.0

    if problem.method == "two-sided":

        def residual(x):
            rr, pn = x
            if rr <= 0:
                return [1e3, 1e3]
            back = _half_curve(rr, pn, orient, problem, forward=False)
            fwd = _half_curve(rr, pn, orient, problem, forward=True)
            left = back.phi[0] - _tail_correction(back.r[0], back.u[0])
            right = fwd.phi[-1] + _tail_correction(fwd.r[-1], fwd.u[-1])
            return [left - phi_a, right - phi_b]

        # deliberately start off the symmetry axis
        guess = [r0 * 1.1, phi_a + 0.35 * sigma]
        sol = optimize.root(residual, guess, method="hybr", options={"xtol": 1e-13})
        if not sol.success or max(abs(v) for v in residual(sol.x)) > 1e-8:
            raise NotFoundError(f"two-sided shoot did not converge: {sol.message}", trace)
        r0, phi_n = float(sol.x[0]), float(sol.x[1])

    back = _half_curve(r0, phi_n, orient, problem, forward=False)
    fwd = _half_curve(r0, phi_n, orient, problem, forward=True)
    curve = _trim(_assemble(back, fwd, rays), max(problem.radius, r0 + 4.0))
    object.__setattr__(curve, "_shoot_trace", trace)
    object.__setattr__(curve, "_neck_radius", float(r0))
    return curve


def neck_radius(curve: ProfileCurve) -> float:
    return float(np.min(curve.r))


# --- independent certification -------------------------------------------------------


def _realify(z):
    return np.stack([z[..., 0].real, z[..., 0].imag, z[..., 1].real, z[..., 1].imag], axis=-1)


def residual_field(curve: ProfileCurve, n_alpha: int = 8, alpha_step: float | None = None):
    """Pointwise |H - x^perp| on an (s, alpha) sample grid.

    Only the sample positions gamma = r e^{i phi} are used: the embedding is
    differentiated by second-order central differences in s and alpha and H
    is the normal part of g^{ij} F_ij.  Returns (s_interior, values) with
    values of shape (n_interior, n_alpha).
    """
    if not curve.is_uniform:
        raise DomainError("residual needs uniformly spaced samples")
    h = curve.step
    da = h if alpha_step is None else alpha_step
    g = curve.gamma
    alphas = np.arange(n_alpha) * (2 * np.pi / n_alpha) + 0.3

    # Differences are taken on gamma first (the embedding is linear in gamma) and
    # the alpha differences of cos/sin are expanded exactly, e.g.
    # cos(a+d) - 2 cos a + cos(a-d) = -2 (1 - cos d) cos a, to avoid cancellation.
    def F(gg, c, s_):
        return _realify(np.stack([gg[:, None] * c[None, :], gg[:, None] * s_[None, :]], axis=-1))

    ca, sa = np.cos(alphas), np.sin(alphas)
    gm, g0, gp = g[:-2], g[1:-1], g[2:]
    X = F(g0, ca, sa)
    Fs = F((gp - gm) / (2 * h), ca, sa)
    Fss = F((gp - 2 * g0 + gm) / h**2, ca, sa)
    c1 = math.sin(da) / da
    c2 = 2 * (1 - math.cos(da)) / da**2
    Fa = F(g0 * c1, -sa, ca)
    Faa = F(-g0 * c2, ca, sa)
    Fsa = F((gp - gm) / (2 * h) * c1, -sa, ca)

    E = np.einsum("...i,...i", Fs, Fs)
    Fm = np.einsum("...i,...i", Fs, Fa)
    G = np.einsum("...i,...i", Fa, Fa)
    det = E * G - Fm**2
    if np.any(np.sqrt(np.abs(det)) < 1e-12):
        raise NumericalDegeneracyError("discrete tangent frame degenerates (area element ~ 0)")
    gi11, gi12, gi22 = G / det, -Fm / det, E / det
    Hraw = gi11[..., None] * Fss + 2 * gi12[..., None] * Fsa + gi22[..., None] * Faa

    # normal projection via Gram-Schmidt on (Fs, Fa)
    e1 = Fs / np.sqrt(E)[..., None]
    w = Fa - np.einsum("...i,...i", Fa, e1)[..., None] * e1
    e2 = w / np.linalg.norm(w, axis=-1)[..., None]
    V = Hraw - X
    V = V - np.einsum("...i,...i", V, e1)[..., None] * e1 - np.einsum("...i,...i", V, e2)[..., None] * e2
    return curve.s[1:-1], np.linalg.norm(V, axis=-1)


def residual_selfexpander(curve: ProfileCurve, n_alpha: int = 8, alpha_step: float | None = None) -> float:
    """max |H - x^perp| over the sample grid (finite differences of the embedding)."""
    return float(np.max(residual_field(curve, n_alpha, alpha_step)[1]))


def lagrangian_angle_along(curve: ProfileCurve) -> np.ndarray:
    """theta = arg gamma' + arg gamma, continued along the curve.

    Continuation is modulo pi so that a line through the origin, whose
    sheets carry opposite orientations, has constant angle.
    """
    theta = curve.psi + curve.phi
    return np.unwrap(theta, period=np.pi)


def liouville_primitive(curve: ProfileCurve) -> np.ndarray:
    """beta with d beta = lambda along the profile, beta(s_min) = 0."""
    lam = curve.r * np.sin(curve.u)
    return cumulative_simpson(lam, x=curve.s, initial=0.0)


def beta_theta_sum(curve: ProfileCurve) -> np.ndarray:
    """theta + beta along the profile; constant exactly on expanders."""
    return lagrangian_angle_along(curve) + liouville_primitive(curve)


def oscillation(values) -> float:
    v = np.asarray(values)
    return float(v.max() - v.min())


@dataclass(frozen=True)
class AcceptReport:
    residual: float
    residual_tol: float
    beta_theta_oscillation: float
    beta_theta_tol: float
    min_radius: float

    @property
    def accepted(self) -> bool:
        return (
            self.residual < self.residual_tol
            and self.beta_theta_oscillation < self.beta_theta_tol
            and self.min_radius > 0
        )


def default_residual_tol(step: float) -> float:
    return 10.0 * step**2 + 1e-10


def accept(curve: ProfileCurve, residual_tol: float | None = None, beta_theta_tol: float = 1e-6) -> AcceptReport:
    """Certify a profile with the residual oracle and the theta + beta test."""
    tol = default_residual_tol(curve.step) if residual_tol is None else residual_tol
    return AcceptReport(
        residual=residual_selfexpander(curve),
        residual_tol=tol,
        beta_theta_oscillation=oscillation(beta_theta_sum(curve)),
        beta_theta_tol=beta_theta_tol,
        min_radius=float(np.min(curve.r)),
    )


# --- decay of the graph potential ------------------------------------------------------


@dataclass(frozen=True)
class GraphTail:
    """Outgoing end of a profile written as a graph over its asymptotic ray."""

    a: np.ndarray  # coordinate along the ray
    height: np.ndarray  # signed distance from the ray
    potential: np.ndarray  # psi with d psi / da = height, psi -> 0 at infinity


def graph_tail(curve: ProfileCurve, r_start: float = 1.5) -> GraphTail:
    """Graph data of the outgoing end beyond radius ``r_start``.

    All tail quantities are accumulated from the far end inwards so that
    exponentially small values keep their relative accuracy.
    """
    inside = np.nonzero(curve.r < r_start)[0]
    i0 = int(inside[-1]) + 1 if inside.size else 0
    if i0 >= len(curve) - 3:
        raise InsufficientDataError("curve does not reach the requested tail radius")
    s = curve.s[i0:]
    r = curve.r[i0:]
    u = curve.u[i0:]
    x = (s[-1] - s)[::-1]
    dphi = cumulative_simpson((np.sin(u) / r)[::-1], x=x, initial=0.0)[::-1]
    dphi = dphi + _tail_correction(r[-1], u[-1])
    height = r * np.sin(dphi)
    a = r * np.cos(dphi)
    da_ds = np.cos(u - dphi)
    # psi(a) = -int_a^inf height; the far tail of a Gaussian-decaying height adds ~height/a
    pot = cumulative_simpson((height * da_ds)[::-1], x=x, initial=0.0)[::-1]
    pot = -(pot + height[-1] / a[-1])
    return GraphTail(a=a, height=height, potential=pot)


@dataclass(frozen=True)
class DecayFit:
    """Fit of log|psi| = log C - b R^2 against a power law log|psi| = c + p log R."""

    b: float
    b_stderr: float
    C: float
    rss_exponential: float
    rss_polynomial: float
    n_points: int
    r_range: tuple[float, float]

    @property
    def slope(self) -> float:
        return -self.b

    @property
    def exponential_preferred(self) -> bool:
        return self.rss_exponential < self.rss_polynomial


def _linfit(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rss = float(resid @ resid)
    dof = max(len(x) - 2, 1)
    cov = rss / dof * np.linalg.inv(A.T @ A)
    return coef, rss, float(np.sqrt(cov[1, 1]))


def fit_decay(curve: ProfileCurve, r_range: tuple[float, float] | None = None, stride: int = 5) -> DecayFit:
    """Regress log|psi| of the graph potential against R^2 on both ends."""
    if r_range is None:
        r_range = (2.5, min(curve.r[0], curve.r[-1]) - 0.5)
    lo, hi = r_range
    if hi - lo < 1.0:
        raise InsufficientDataError(f"tail range {r_range} too short for a decay fit")
    xs, ys = [], []
    for c in (curve, curve.reversed()):
        t = graph_tail(c, r_start=lo - 0.5)
        m = (t.a >= lo) & (t.a <= hi) & (np.abs(t.potential) > 0)
        xs.append(t.a[m][::stride])
        ys.append(np.log(np.abs(t.potential[m][::stride])))
    a = np.concatenate(xs)
    y = np.concatenate(ys)
    if a.size < 8:
        raise InsufficientDataError("too few tail samples for a decay fit")
    coef_e, rss_e, se = _linfit(a**2, y)
    _, rss_p, _ = _linfit(np.log(a), y)
    return DecayFit(
        b=float(-coef_e[1]),
        b_stderr=se,
        C=float(np.exp(coef_e[0])),
        rss_exponential=rss_e,
        rss_polynomial=rss_p,
        n_points=int(a.size),
        r_range=(float(lo), float(hi)),
    )
