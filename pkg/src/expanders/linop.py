"""Finite-difference discretisation of the drift operator on a Fourier mode.

On an equivariant surface with profile (r(s), u(s)) a function
f(s) e^{i k alpha} is mapped by

    L f  = f'' + (r'/r + r r') f' - (k^2/r^2 + 2) f
    L* f = f'' + (r'/r - r r') f' - (k^2/r^2 + 4 + r^2 sin^2 u) f

Both are written in flux form (1/w)(w f')' with w = r exp(+-r^2/2), which
makes each matrix self-adjoint for its own weight.  Values vanish at the
truncation radius.  A base curve through the origin is treated as the flat
plane on the half-line r = s > 0 with cell-centred nodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from . import geom
from .errors import DomainError, StepTooLargeError
from .profile import ProfileCurve, ode_rhs

MIN_INTERIOR = 16
MIN_RADIUS = 4.0
L2_COERCIVITY = 3.0  # -<L f, f> >= 3 |f|^2 on any expander (n = 2)


@dataclass(frozen=True, eq=False)
class OperatorGrid:
    """Uniform grid of spacing ``h`` along the base profile, cut at ``radius``."""

    base: ProfileCurve
    mode: int = 0
    h: float = 0.01
    radius: float = 6.0

    def __post_init__(self):
        if self.h <= 0:
            raise DomainError("grid spacing must be positive")
        if self.mode < 0 or int(self.mode) != self.mode:
            raise DomainError("Fourier mode must be a nonnegative integer")
        if self.radius < MIN_RADIUS:
            raise DomainError(f"truncation radius must be >= {MIN_RADIUS}")
        if self.n < MIN_INTERIOR:
            raise DomainError(f"grid has {self.n} interior nodes; need >= {MIN_INTERIOR}")

    @cached_property
    def axis(self) -> bool:
        """True for the flat plane, discretised on the half-line with an axis."""
        return self.base.origin_crossings().size > 0

    @cached_property
    def _nodes(self):
        h = self.h
        if self.axis:
            n = int(math.floor(self.radius / h + 1e-9))
            r = (np.arange(n) + 0.5) * h
            s = r.copy()
            # nodes and faces: faces at i h, i = 0..n
            return dict(s=s, r=r, rp=np.ones(n), sin_u=np.zeros(n), r_face=np.arange(n + 1) * h)
        b = self.base
        inside = np.nonzero(b.r <= self.radius)[0]
        if inside.size < 2:
            raise DomainError("base profile does not reach inside the truncation radius")
        sa, sb = b.s[inside[0]], b.s[inside[-1]]
        m = int(math.floor((sb - sa) / h + 1e-9))
        s_all = sa + np.arange(m + 1) * h
        r_sp = CubicSpline(b.s, b.r)
        u_sp = CubicSpline(b.s, b.u)
        s = s_all[1:-1]
        faces = sa + (np.arange(m) + 0.5) * h
        u = u_sp(s)
        return dict(s=s, r=r_sp(s), rp=np.cos(u), sin_u=np.sin(u), r_face=r_sp(faces))

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def s(self) -> np.ndarray:
        return self._nodes["s"]

    @property
    def r(self) -> np.ndarray:
        return self._nodes["r"]

    @property
    def r_prime(self) -> np.ndarray:
        return self._nodes["rp"]

    @property
    def normal_sq(self) -> np.ndarray:
        """|x^perp|^2 = r^2 sin^2 u at the nodes."""
        return (self.r * self._nodes["sin_u"]) ** 2

    @property
    def tangent_sq(self) -> np.ndarray:
        return (self.r * self.r_prime) ** 2

    @property
    def volume(self) -> np.ndarray:
        """Discrete volume element r h per node (2 pi dropped)."""
        return self.r * self.h

    def inner(self, f, g) -> float:
        return float(np.sum(self.volume * f * g))

    def norm(self, f) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    def refined(self, factor: int = 2) -> "OperatorGrid":
        return OperatorGrid(self.base, self.mode, self.h / factor, self.radius)

    def with_mode(self, mode: int) -> "OperatorGrid":
        return OperatorGrid(self.base, mode, self.h, self.radius)


def _flux_parts(grid: OperatorGrid, sign: float):
    """Lower/upper off-diagonals and diagonal of (1/w)(w f')' with w = r exp(sign r^2/2)."""
    rf = grid._nodes["r_face"]
    r = grid.r
    h2 = grid.h**2
    with np.errstate(divide="ignore"):
        log_face = np.log(rf) + sign * rf**2 / 2
    log_node = np.log(r) + sign * r**2 / 2
    left = np.exp(log_face[:-1] - log_node) / h2  # face i - 1/2
    right = np.exp(log_face[1:] - log_node) / h2  # face i + 1/2
    return left, right


def _assemble(grid, sign, potential):
    left, right = _flux_parts(grid, sign)
    diag = -(left + right) - potential
    return sparse.diags([left[1:], diag, right[:-1]], [-1, 0, 1], format="csr")


def assemble(grid: OperatorGrid, mass: float = -2.0) -> sparse.csr_matrix:
    """Matrix of L on mode ``grid.mode``; ``mass`` is the zeroth-order coefficient."""
    pot = grid.mode**2 / grid.r**2 - mass
    return _assemble(grid, +1.0, pot)


def assemble_adjoint(grid: OperatorGrid) -> sparse.csr_matrix:
    """Matrix of L* = Delta - <x, grad> - (4 + |x^perp|^2)."""
    pot = grid.mode**2 / grid.r**2 + 4.0 + grid.normal_sq
    return _assemble(grid, -1.0, pot)


def _symmetric_tridiagonal(grid: OperatorGrid, mass: float = -2.0):
    """Diagonal and off-diagonal of the symmetrised L (same spectrum)."""
    left, right = _flux_parts(grid, +1.0)
    diag = -(left + right) - (grid.mode**2 / grid.r**2 - mass)
    off = np.sqrt(right[:-1] * left[1:])
    return diag, off


def eigenvalues(grid: OperatorGrid, mass: float = -2.0) -> np.ndarray:
    """All eigenvalues of the discrete L, ascending."""
    d, e = _symmetric_tridiagonal(grid, mass)
    return eigh_tridiagonal(d, e, eigvals_only=True)


def eigenvalue_nearest(grid: OperatorGrid, target: float, mass: float = -2.0) -> float:
    ev = eigenvalues(grid, mass)
    return float(ev[np.argmin(np.abs(ev - target))])


# --- norms ---------------------------------------------------------------------------


def _d1(n, h, ghost=0.0):
    """Central first difference; ``ghost`` is the left reflection factor (axis parity)."""
    D = sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1]).tolil()
    D[0, 0] = -ghost
    return D.tocsr() / (2 * h)


def _d2(n, h, ghost=0.0):
    D = sparse.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]).tolil()
    D[0, 0] += ghost
    return D.tocsr() / h**2


def _h2star_pieces(grid: OperatorGrid):
    """Difference operators whose squared weighted norms sum to |f|^2_{H^2_*}."""
    n, h, k = grid.n, grid.h, grid.mode
    r, rp = grid.r, grid.r_prime
    I = sparse.identity(n, format="csr")
    # f(-r) = (-1)^k f(r) across the axis of the flat plane
    ghost = (-1.0) ** k if grid.axis else 0.0
    D1, D2 = _d1(n, h, ghost), _d2(n, h, ghost)
    inv_r = sparse.diags(1.0 / r)
    l2 = [I]
    grad = [D1, k * inv_r]
    hess = [
        D2,
        sparse.diags(rp / r) @ D1 - sparse.diags(k * k / r**2),
        math.sqrt(2.0) * k * (_d1(n, h, -ghost) @ inv_r),
    ]
    drift = [sparse.diags(r * rp) @ D1]
    return l2, grad, hess, drift


def _gram(grid, ops):
    W = sparse.diags(grid.volume)
    G = None
    for op in ops:
        term = (op.T @ W @ op).tocsc()
        G = term if G is None else G + term
    return G


@dataclass(frozen=True)
class WeightedNormReport:
    l2: float
    h1: float
    h2star: float
    drift: float


def norms(grid: OperatorGrid, f) -> WeightedNormReport:
    """Discrete L^2, H^1 and H^2_* norms of the mode-k function f at the grid nodes."""
    f = np.asarray(f, dtype=float)
    l2, grad, hess, drift = _h2star_pieces(grid)

    def sq(ops):
        return sum(grid.inner(op @ f, op @ f) for op in ops)

    a, b, c, d = sq(l2), sq(grad), sq(hess), sq(drift)
    return WeightedNormReport(math.sqrt(a), math.sqrt(a + b), math.sqrt(a + b + c + d), math.sqrt(d))


def smallest_singular_value(grid: OperatorGrid, mass: float = -2.0, space: str = "h2star") -> float:
    """min |L f|_{L^2} / |f| over nonzero f, with |f| the H^2_* (or L^2) norm."""
    A = assemble(grid, mass).tocsc()
    W = sparse.diags(grid.volume)
    K = (A.T @ W @ A).tocsc()
    if space == "h2star":
        l2, grad, hess, drift = _h2star_pieces(grid)
        G = _gram(grid, l2 + grad + hess + drift)
    elif space == "l2":
        G = W.tocsc()
    else:
        raise DomainError(f"unknown norm {space!r}")
    lam = eigsh(K, k=1, M=G, sigma=0.0, which="LM", return_eigenvectors=False)
    return float(math.sqrt(max(lam[0], 0.0)))


# --- reports -------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    mode: int
    sigma: float
    sigma_refined: float
    sigma_l2: float
    drift: float

    @property
    def stable(self) -> bool:
        return self.sigma > 0 and self.drift < 0.2 and self.sigma_l2 >= L2_COERCIVITY * (1 - 1e-3)


def stability_check(grid: OperatorGrid, mass: float = -2.0) -> StabilityReport:
    """sigma_min on the grid and on the refined grid, plus the L^2 lower bound test."""
    s1 = smallest_singular_value(grid, mass)
    s2 = smallest_singular_value(grid.refined(), mass)
    sl2 = smallest_singular_value(grid, mass, space="l2")
    drift = abs(s2 - s1) / max(abs(s1), 1e-300)
    return StabilityReport(grid.mode, s1, s2, sl2, drift)


def adjoint_defect(grid: OperatorGrid, f, g) -> float:
    """|<L f, g> - <f, L* g>| / (|f| |g|) in the volume-weighted pairing."""
    A = assemble(grid)
    B = assemble_adjoint(grid)
    lhs = grid.inner(A @ f, g)
    rhs = grid.inner(f, B @ g)
    return abs(lhs - rhs) / (grid.norm(f) * grid.norm(g))


def smooth_random_functions(grid: OperatorGrid, count: int, seed: int = 0, n_terms: int = 6):
    """Smooth, compactly supported random functions as callables of s."""
    rng = np.random.default_rng(seed)
    lo, hi = grid.s[0], grid.s[-1]
    span = hi - lo
    out = []
    for _ in range(count):
        c = rng.uniform(lo + 0.3 * span, hi - 0.3 * span)
        w = rng.uniform(0.1, 0.25) * span
        coef = rng.normal(size=n_terms)
        freq = np.arange(1, n_terms + 1) * np.pi / span

        def fn(s, c=c, w=w, coef=coef, freq=freq):
            s = np.asarray(s, dtype=float)
            x = (s - c) / w
            bump = np.where(np.abs(x) < 1, np.exp(-1.0 / np.clip(1 - x * x, 1e-300, None)), 0.0)
            return bump * (np.sin(np.outer(s - c, freq)) @ coef + coef[0])

        out.append(fn)
    return out


@dataclass(frozen=True)
class CoercivityReport:
    max_ratio: float
    max_ratio_refined: float
    bound: float  # 1 / sigma_min^2 on the coarse grid
    trials: int

    @property
    def drift(self) -> float:
        return max(self.max_ratio, self.max_ratio_refined) / min(self.max_ratio, self.max_ratio_refined)

    @property
    def stable(self) -> bool:
        return self.drift < 2.0 and self.max_ratio <= self.bound * (1 + 1e-8)


def _max_ratio(grid, funcs):
    A = assemble(grid)
    best = 0.0
    for fn in funcs:
        f = fn(grid.s)
        if np.abs(f).max() == 0:
            continue
        best = max(best, norms(grid, f).h2star ** 2 / grid.norm(A @ f) ** 2)
    return best


def coercivity_check(grid: OperatorGrid, trials: int = 100, seed: int = 0) -> CoercivityReport:
    """Largest |f|^2_{H^2_*} / |L f|^2_{L^2} over smooth random test functions."""
    funcs = smooth_random_functions(grid, trials, seed)
    sigma = smallest_singular_value(grid)
    return CoercivityReport(_max_ratio(grid, funcs), _max_ratio(grid.refined(), funcs), 1 / sigma**2, trials)


@dataclass(frozen=True)
class BarrierReport:
    max_excess: float  # max over nodes of (L rho + 4 rho) / rho; <= 0 required
    matrix_error: float  # max |A rho - closed form| / max rho on nodes with r <= R - 1
    strict_where_normal: bool

    @property
    def ok(self) -> bool:
        return self.max_excess <= 1e-12


def barrier_values(grid: OperatorGrid):
    """rho = exp(-r^2/2) and the closed form L rho = rho (|x^T|^2 - 4 - |x|^2) at the nodes."""
    rho = np.exp(-grid.r**2 / 2)
    return rho, rho * (grid.tangent_sq - 4.0 - grid.r**2)


def barrier_check(base: ProfileCurve, h: float = 0.01, radius: float = 6.0) -> BarrierReport:
    grid = OperatorGrid(base, 0, h, radius)
    rho, lrho = barrier_values(grid)
    excess = (lrho + 4 * rho) / rho
    A = assemble(grid)
    inner = grid.r <= radius - 1
    err = float(np.max(np.abs((A @ rho - lrho)[inner])) / np.max(rho))
    nz = grid.normal_sq > 1e-12
    strict = bool(np.all(excess[nz] < 0))
    return BarrierReport(float(np.max(excess)), err, strict)


# --- linearisation -------------------------------------------------------------------


@dataclass(frozen=True)
class LinearizationReport:
    s: np.ndarray
    slope: np.ndarray  # Richardson slope of (theta + beta)
    operator: np.ndarray  # assembled L phi on the same nodes
    closed_form: np.ndarray
    relative_error: float
    defects: tuple
    order: float


def _deformed_sum_change(base: ProfileCurve, f, fp, fpp, eps):
    """(theta + beta)_eps - (theta + beta)_0 at the base samples for gamma -> gamma + eps i f' gamma'."""
    g = base.gamma
    t = base.tangent
    kappa = ode_rhs((base.r, base.phi, base.psi))[2]
    dt = 1j * kappa * t
    ge = g + eps * 1j * fp * t
    dge = t + eps * 1j * (fpp * t + fp * dt)
    if np.min(np.abs(ge)) <= 0.5 * np.min(np.abs(g)) or np.max(np.abs(dge - t)) >= 0.5:
        raise StepTooLargeError(f"deformation with eps={eps:g} leaves the graphical regime")

    def frames(gg, dg):
        zero = np.zeros_like(gg)
        u = np.stack([dg / np.abs(dg), zero], axis=-1)
        v = np.stack([zero, gg / np.abs(gg)], axis=-1)
        return u, v

    u0, v0 = frames(g, t)
    ue, ve = frames(ge, dge)
    th0 = geom.lagrangian_angles(u0, v0)
    the = geom.lagrangian_angles(ue, ve)
    dtheta = np.angle(np.exp(1j * (the - th0)))
    lam_diff = (np.conj(ge) * dge).imag - (np.conj(g) * t).imag
    dbeta = cumulative_simpson(lam_diff, x=base.s, initial=0.0)
    return dtheta + dbeta


def gaussian_bump(center: float = 0.0, width: float = 0.5):
    """f, f', f'' of exp(-(s - c)^2 / (2 w^2))."""

    def f(s):
        x = (s - center) / width
        e = np.exp(-x * x / 2)
        return e, -x / width * e, (x * x - 1) / width**2 * e

    return f


def closed_form_operator(base: ProfileCurve, f, fp, fpp):
    """L f = f'' + (r'/r + r r') f' - 2 f on the base samples (mode 0)."""
    rp = np.cos(base.u)
    return fpp + (rp / base.r + base.r * rp) * fp - 2 * f


def linearization_check(base: ProfileCurve, test_function=None, epsilons=(1e-2, 5e-3), radius=None) -> LinearizationReport:
    """Finite-difference derivative of theta + beta under a Hamiltonian deformation.

    ``test_function(s)`` returns (f, f', f'') for an equivariant (mode 0)
    function; the default is a Gaussian bump at the neck.
    """
    if not base.is_uniform:
        raise DomainError("linearisation check needs a uniformly sampled base")
    test_function = gaussian_bump() if test_function is None else test_function
    f, fp, fpp = test_function(base.s)
    e1, e2 = epsilons
    if not np.isclose(e2, e1 / 2):
        raise DomainError("epsilons must be (eps, eps / 2)")
    G1 = _deformed_sum_change(base, f, fp, fpp, e1)
    G2 = _deformed_sum_change(base, f, fp, fpp, e2)
    slope = 2 * G2 / e2 - G1 / e1
    closed = closed_form_operator(base, f, fp, fpp)

    radius = base.r.max() if radius is None else radius
    grid = OperatorGrid(base, 0, base.step, min(radius, base.r[0], base.r[-1]))
    A = assemble(grid)
    op = A @ test_function(grid.s)[0]
    idx = np.searchsorted(base.s, grid.s)
    idx = np.clip(idx, 0, len(base) - 1)
    idx = np.where(np.abs(base.s[idx] - grid.s) < 1e-9, idx, idx - 1)
    scale = np.max(np.abs(op))
    rel = float(np.max(np.abs(slope[idx] - op)) / scale) if scale > 0 else float(np.max(np.abs(slope)))

    d1 = float(np.max(np.abs(G1 - e1 * closed)))
    d2 = float(np.max(np.abs(G2 - e2 * closed)))
    order = math.log2(d1 / d2) if d1 > 0 and d2 > 0 else math.inf
    return LinearizationReport(base.s[idx], slope[idx], op, closed[idx], rel, (d1, d2), order)


# --- radial growth on the plane ------------------------------------------------------


@dataclass(frozen=True)
class RadialGrowthReport:
    r: np.ndarray
    f: np.ndarray
    lhs: np.ndarray  # (2 + n/2) f
    rhs: np.ndarray  # r f'

    @property
    def holds(self) -> np.ndarray:
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-300

    @property
    def ratio(self) -> np.ndarray:
        """r f' / ((2 + n/2) f) where f > 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.lhs > 0, self.rhs / self.lhs, np.nan)


def radial_growth_check(eta, deta, radius: float = 10.0, h: float = 1e-3, n: int = 2) -> RadialGrowthReport:
    """f(r) = int_{B_r} eta^2 + (2 + n/2)^-1 int_{B_r} |grad eta|^2 for radial eta on the plane.

    ``eta`` and ``deta`` are callables of r.  f' is the sphere integral of
    the same integrand, so r f' needs no differencing.
    """
    if n != 2:
        raise DomainError("only n = 2 is supported")
    c = 2 + n / 2
    r = np.arange(1, int(round(radius / h)) + 1) * h
    r = np.concatenate([[0.0], r])
    dens = eta(r) ** 2 + deta(r) ** 2 / c
    sphere = 2 * np.pi * r * dens
    f = cumulative_simpson(sphere, x=r, initial=0.0)
    return RadialGrowthReport(r[1:], f[1:], c * f[1:], r[1:] * sphere[1:])


# --- persistence ---------------------------------------------------------------------


def spectrum_record(grid: OperatorGrid, n_eigs: int = 5, mass: float = -2.0) -> dict:
    ev = eigenvalues(grid, mass)
    nearest = ev[np.argsort(np.abs(ev))[:n_eigs]]
    return {
        "mode": int(grid.mode),
        "sigma_min": smallest_singular_value(grid, mass),
        "eigenvalues_nearest_zero": [float(v) for v in nearest],
        "grid": {"h": grid.h, "R": grid.radius},
    }


def spectrum_json(records) -> str:
    return json.dumps(list(records), indent=2, sort_keys=True)
