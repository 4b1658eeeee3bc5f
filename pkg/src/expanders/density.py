"""Gaussian densities of equivariant surfaces and plane pairs in C^2.

``Theta_t(x0, l)`` of a flow ``L_t = sqrt(2t) L`` is taken with the kernel
of width ``l`` at time ``t``; in terms of :class:`DensityQuery` that is the
query ``(x0, l + t, t)``.  :func:`flow_density` does this bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.special import i0e

from .errors import AccuracyNotMetError, DomainError
from .geom import EquivariantRayPair, PlanePair
from .profile import ProfileCurve, asymptotic_angles

N_DIM = 2
DEFAULT_N_ALPHA = 256


@dataclass(frozen=True, eq=False)
class DensityQuery:
    """Kernel centre ``x0`` in C^2, scale ``l`` and evaluation time ``t``."""

    center: np.ndarray
    l: float
    t: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=complex)
        if c.shape != (N_DIM,):
            raise DomainError(f"centre must be a point of C^2, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("centre must be finite")
        if not self.l > 0:
            raise DomainError(f"scale must be positive, got {self.l!r}")
        if not self.t >= 0:
            raise DomainError(f"time must be nonnegative, got {self.t!r}")
        if not self.l - self.t > 0:
            raise DomainError(f"kernel evaluated at or after its singular time (l={self.l}, t={self.t})")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def width(self) -> float:
        return self.l - self.t

    def scaled(self, c: float) -> "DensityQuery":
        """Parabolic rescaling x0 -> c x0, (l, t) -> c^2 (l, t)."""
        return DensityQuery(self.center * c, self.l * c * c, self.t * c * c)


@dataclass(frozen=True)
class SurfaceMeasure:
    """Integration domain: an equivariant profile or a pair of planes.

    ``alpha_rule`` is ``"bessel"`` (exact angular integral) or
    ``"trapezoid"`` with ``n_alpha`` periodic nodes.
    """

    profile: ProfileCurve | None = None
    pair: PlanePair | None = None
    n_alpha: int = DEFAULT_N_ALPHA
    alpha_rule: str = "bessel"
    tail: bool = True

    def __post_init__(self):
        if (self.profile is None) == (self.pair is None):
            raise DomainError("give exactly one of profile or pair")
        if self.n_alpha <= 0:
            raise DomainError("angular resolution must be positive")
        if self.alpha_rule not in ("bessel", "trapezoid"):
            raise DomainError(f"unknown angular rule {self.alpha_rule!r}")


def heat_kernel(query: DensityQuery, x) -> np.ndarray | float:
    """Backwards heat kernel at x in C^2 (last axis of length 2)."""
    tau = query.width
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != N_DIM:
        raise DomainError("points must lie in C^2")
    d2 = np.sum(np.abs(x - query.center) ** 2, axis=-1)
    out = np.exp(-d2 / (4 * tau)) / (4 * np.pi * tau) ** (N_DIM / 2)
    return float(out) if np.ndim(out) == 0 else out


def plane_distance(phi: float, x0) -> float:
    """Distance from x0 to the plane e^{i phi} R^2."""
    return float(np.linalg.norm((np.asarray(x0, dtype=complex) * np.exp(-1j * phi)).imag))


def plane_pair_density(pair: PlanePair, query: DensityQuery) -> float:
    """Closed-form density of P1 + P2 (the static cone) for the query."""
    d1, d2 = pair.distances(query.center)
    tau = query.width
    return math.exp(-d1 * d1 / (4 * tau)) + math.exp(-d2 * d2 / (4 * tau))


def asymptotic_density(rays: EquivariantRayPair, query: DensityQuery) -> float:
    """Density of the asymptotic cone of a profile with these rays."""
    tau = query.width
    if rays.is_plane:
        d = plane_distance(rays.phi_plus, query.center)
        return math.exp(-d * d / (4 * tau))
    rot = np.exp(-1j * rays.phi_minus)
    return plane_pair_density(rays.plane_pair(), DensityQuery(query.center * rot, query.l, query.t))


# --- quadrature on equivariant surfaces ----------------------------------------------


def _alpha_integral(gamma, r, query, rule, n_alpha):
    """r(s) * int_0^{2 pi} Phi(F(s, a)) da for each profile sample."""
    tau = query.width
    a_coef, b_coef = np.conj(query.center)
    base = (np.abs(gamma) ** 2 + np.sum(np.abs(query.center) ** 2)) / (4 * tau)
    pref = r / (4 * np.pi * tau)
    if rule == "bessel":
        # Re<F, x0> = C cos(a - a0)
        c = np.hypot((gamma * a_coef).real, (gamma * b_coef).real)
        z = c / (2 * tau)
        return pref * 2 * np.pi * i0e(z) * np.exp(z - base)
    alphas = np.arange(n_alpha) * (2 * np.pi / n_alpha)
    re = (gamma[:, None] * (a_coef * np.cos(alphas) + b_coef * np.sin(alphas))).real
    vals = np.exp(re / (2 * tau) - base[:, None])
    return pref * vals.mean(axis=1) * 2 * np.pi


@dataclass(frozen=True)
class _Sheet:
    gamma: np.ndarray
    s: np.ndarray
    end_phi: list  # directions of open ends at the far side(s)
    end_radius: list


def _sheets(curve: ProfileCurve) -> list[_Sheet]:
    """Split a profile at origin crossings into sheets that start at 0.

    A sheet that is the point reflection of another generates the same
    surface and is dropped.
    """
    cuts = curve.origin_crossings()
    g = curve.gamma
    if cuts.size == 0:
        return [_Sheet(g, curve.s, [curve.phi[0], curve.phi[-1]], [curve.r[0], curve.r[-1]])]
    if cuts.size > 1:
        raise DomainError("profiles crossing the origin more than once are not supported")
    k = int(cuts[0])
    left = g[: k + 1][::-1]
    right = g[k + 1 :]
    sheets = []
    for part in (left, right):
        pts = np.concatenate([[0.0], part])
        s = np.concatenate([[0.0], np.abs(part)])
        sheets.append(_Sheet(pts, s, [float(np.angle(part[-1]))], [float(abs(part[-1]))]))
    a, b = sheets
    if a.gamma.size == b.gamma.size and np.max(np.abs(a.gamma + b.gamma)) <= 1e-9 * (1 + np.max(np.abs(a.gamma))):
        sheets = [b]
    return sheets


def _ray_segment(phi, radius, s_grid, query, rule, n_alpha):
    """Density of the part of the plane e^{i phi} R^2 within ``radius`` on a given radial grid."""
    rho = s_grid * (radius / s_grid[-1])
    vals = _alpha_integral(rho * np.exp(1j * phi), rho, query, rule, n_alpha)
    return simpson(vals, x=rho)


@dataclass(frozen=True)
class DensityResult:
    value: float
    tail: float
    tail_bound: float


def surface_density_detail(
    surface: SurfaceMeasure, query: DensityQuery, accuracy: float | None = None
) -> DensityResult:
    """Density with its tail correction and a bound for the plane-substitution error."""
    if surface.pair is not None:
        return DensityResult(plane_pair_density(surface.pair, query), 0.0, 0.0)
    curve = surface.profile
    tau = query.width
    total = 0.0
    tail = 0.0
    bound = 0.0
    x0n = float(np.linalg.norm(query.center))
    for sheet in _sheets(curve):
        vals = _alpha_integral(sheet.gamma, np.abs(sheet.gamma), query, surface.alpha_rule, surface.n_alpha)
        total += simpson(vals, x=sheet.s)
        if not surface.tail:
            continue
        for phi, rad in zip(sheet.end_phi, sheet.end_radius):
            d = plane_distance(phi, query.center)
            grid = np.linspace(0.0, rad, 2 * int(math.ceil(rad / curve.step)) + 1)
            near = _ray_segment(phi, rad, grid, query, surface.alpha_rule, surface.n_alpha)
            far = max(math.exp(-d * d / (4 * tau)) - near, 0.0)
            tail += far
            mass = math.exp(-max(rad - x0n, 0.0) ** 2 / (4 * tau))
            bound += math.exp(-rad * rad / 4) * mass
    if accuracy is not None and bound > accuracy:
        raise AccuracyNotMetError(
            f"tail substitution bound {bound:.3e} exceeds requested accuracy {accuracy:.1e}", bound
        )
    return DensityResult(float(total + tail), float(tail), float(bound))


def surface_density(surface: SurfaceMeasure, query: DensityQuery, accuracy: float | None = None) -> float:
    """Gaussian density of the surface for the query (tail beyond the data included)."""
    return surface_density_detail(surface, query, accuracy).value


def flow_density(expander: ProfileCurve, x0, l: float, t: float, **kw) -> float:
    """Theta_t(x0, l) of L_t = sqrt(2t) L with kernel width l at time t."""
    if t <= 0:
        raise DomainError("flow density needs t > 0; use asymptotic_density at t = 0")
    surf = SurfaceMeasure(profile=expander.scaled(math.sqrt(2 * t)), **kw)
    return surface_density(surf, DensityQuery(x0, l + t, t))


def area_in_ball(curve: ProfileCurve, x, radius: float) -> float:
    """H^2 of the surface inside B_radius(x), from the exact angular measure."""
    x = np.asarray(x, dtype=complex)
    total = 0.0
    for sheet in _sheets(curve):
        g = sheet.gamma
        a, b = np.conj(x)
        c = np.hypot((g * a).real, (g * b).real)
        q = np.abs(g) ** 2 + np.sum(np.abs(x) ** 2) - radius**2
        with np.errstate(divide="ignore", invalid="ignore"):
            cosb = np.where(c > 0, q / (2 * c), np.where(q < 0, -np.inf, np.inf))
        arc = 2 * np.arccos(np.clip(cosb, -1.0, 1.0))
        total += np.trapezoid(np.abs(g) * arc, sheet.s)
    return float(total)


AREA_RATIO_BOUND = 2 * math.pi * math.e


def area_ratio_max(curve: ProfileCurve, centers, radii) -> float:
    """max over samples of H^2(L cap B_r(x)) / r^2."""
    best = 0.0
    for x in centers:
        for rad in radii:
            best = max(best, area_in_ball(curve, x, rad) / rad**2)
    return best


# --- checks --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityReport:
    max_violation: float
    violations: list = field(default_factory=list)
    n_queries: int = 0
    tolerance: float = 1e-6

    @property
    def ok(self) -> bool:
        return not self.violations


def monotonicity_check(expander: ProfileCurve, centers, scales, times, tol: float = 1e-6) -> MonotonicityReport:
    """Compare Theta_t(x0, l) with the asymptotic-cone density Theta_0(x0, l + t)."""
    rays = expander.rays if expander.rays is not None else asymptotic_angles(expander)
    worst = -math.inf
    bad = []
    n = 0
    for t in times:
        surf = SurfaceMeasure(profile=expander.scaled(math.sqrt(2 * t)))
        for x0 in centers:
            for l in scales:
                lhs = surface_density(surf, DensityQuery(x0, l + t, t))
                rhs = asymptotic_density(rays, DensityQuery(x0, l + t, 0.0))
                excess = lhs - rhs
                worst = max(worst, excess)
                n += 1
                if excess > tol:
                    bad.append((np.asarray(x0).tolist(), float(l), float(t), float(lhs), float(rhs)))
    return MonotonicityReport(float(worst), bad, n, tol)


def white_sample_points(expander: ProfileCurve, n: int = 41) -> list[np.ndarray]:
    """Centres on the surface at alpha = 0 (densities are alpha-invariant), plus the origin."""
    idx = np.unique(np.linspace(0, len(expander) - 1, n).round().astype(int))
    pts = [np.array([g, 0.0], dtype=complex) for g in expander.gamma[idx]]
    pts.append(np.zeros(2, dtype=complex))
    return pts


def white_sup(expander: ProfileCurve, delta: float, centers=None, n_scales: int = 4) -> float:
    """Largest sampled Theta_{1/2}(y, l) over l <= delta / 2."""
    centers = white_sample_points(expander) if centers is None else centers
    surf = SurfaceMeasure(profile=expander)
    t = 0.5
    best = 0.0
    for l in np.geomspace(delta * t / 2 ** (n_scales - 1), delta * t, n_scales):
        for y in centers:
            best = max(best, surface_density(surf, DensityQuery(y, l + t, t)))
    return best


def white_density_bound(expander: ProfileCurve, epsilon0: float, delta: float, centers=None) -> bool:
    """True iff sampled densities at scales l <= delta t stay below 1 + epsilon0 / 2."""
    if epsilon0 <= 0 or delta <= 0:
        raise DomainError("epsilon0 and delta must be positive")
    return white_sup(expander, delta, centers) <= 1 + epsilon0 / 2


def largest_white_delta(expander: ProfileCurve, epsilon0: float, k_max: int = 10, centers=None):
    """Largest delta = 2^-k (k = 0..k_max) passing :func:`white_density_bound`, or None."""
    for k in range(k_max + 1):
        if white_density_bound(expander, epsilon0, 2.0**-k, centers):
            return 2.0**-k
    return None


@dataclass(frozen=True)
class DensitySweep:
    rows: np.ndarray  # columns x0_1, x0_2, x0_3, x0_4, l, t, theta
    sup: float
    argmax: tuple

    @property
    def margin_below_2(self) -> float:
        return 2.0 - self.sup

    def summary(self) -> dict:
        return {"sup": self.sup, "argmax": list(self.argmax), "margin_below_2": self.margin_below_2}


def default_centers(expander: ProfileCurve, n: int = 10) -> list[np.ndarray]:
    """Ten deterministic centres: the origin, points on the surface near the neck, and generic points."""
    k = n // 2
    s_pts = np.linspace(-2.0, 2.0, k)
    g = np.interp(s_pts, expander.s, expander.gamma.real) + 1j * np.interp(s_pts, expander.s, expander.gamma.imag)
    pts = [np.zeros(2, dtype=complex)] + [np.array([z, 0.0]) for z in g]
    rng = np.random.default_rng(7)
    while len(pts) < n:
        pts.append(rng.normal(size=2) + 1j * rng.normal(size=2))
    return pts[:n]


def density_sweep(expander: ProfileCurve, centers=None, scales=None, times=None) -> DensitySweep:
    """Theta_t(x0, l) over a (centre, scale, time) grid; default 10 x 10 x 5 with l <= 2."""
    centers = default_centers(expander) if centers is None else centers
    scales = np.geomspace(0.05, 2.0, 10) if scales is None else scales
    times = np.linspace(0.1, 0.5, 5) if times is None else times
    rows = []
    for t in times:
        surf = SurfaceMeasure(profile=expander.scaled(math.sqrt(2 * t)))
        for x0 in centers:
            x0 = np.asarray(x0, dtype=complex)
            for l in scales:
                th = surface_density(surf, DensityQuery(x0, l + t, t))
                rows.append([x0[0].real, x0[0].imag, x0[1].real, x0[1].imag, l, t, th])
    rows = np.array(rows)
    i = int(np.argmax(rows[:, 6]))
    return DensitySweep(rows, float(rows[i, 6]), tuple(float(v) for v in rows[i, :6]))
