"""Quantitative acceptance checks, shared by ``expanders check-all`` and the test suite.

Each ``criterion_N`` returns a :class:`CriterionResult`; none of them raise
on a failed check.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import density, flow, geom, linop, profile
from .geom import EquivariantRayPair
from .profile import ShootingProblem

NECK_RAYS = (0.0, 2 * math.pi / 3)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0
    time_limit: float | None = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.time_limit:g}s)" if self.time_limit else ""
        items = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{tag}] criterion {self.number}: {self.name} | {items} | {self.seconds:.2f}s{limit}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(number, name, limit, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None:
        detail["within_time_limit"] = dt < limit
        passed = passed and dt < limit
    return CriterionResult(number, name, bool(passed), detail, dt, limit)


@lru_cache(maxsize=None)
def neck(step: float = 0.01, radius: float = 6.0, rays: tuple = NECK_RAYS):
    return profile.shoot(ShootingProblem(EquivariantRayPair(*rays), step=step, radius=radius))


# --- criteria ------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    def run():
        from .cli import main

        with tempfile.TemporaryDirectory() as tmp:
            code = main(["solve", "--rays", "0,pi", "--out", tmp])
        line = profile.shoot(ShootingProblem(EquivariantRayPair(0.0, math.pi)))
        res = profile.residual_selfexpander(line)
        vel = float(np.max(np.abs(flow.velocity(line.gamma))))
        return (code == 0 and res < 1e-10 and vel < 1e-10), {"exit": code, "residual": res, "velocity": vel}

    return _timed(1, "plane fixed point", 1.0, run)


def criterion_2() -> CriterionResult:
    def run():
        z = np.zeros(2)
        scales = [0.05, 0.5, 1.0, 4.0]
        plane = profile.straight_line(0.4)
        cone = profile.cone_profile(EquivariantRayPair(*NECK_RAYS))
        ep = max(abs(density.surface_density(density.SurfaceMeasure(profile=plane), density.DensityQuery(z, l)) - 1) for l in scales)
        ec = max(abs(density.surface_density(density.SurfaceMeasure(profile=cone), density.DensityQuery(z, l)) - 2) for l in scales)
        sweep = density.density_sweep(neck())
        ok = ep < 1e-6 and ec < 1e-6 and sweep.sup < 2 and sweep.margin_below_2 > 0
        return ok, {"plane_err": ep, "cone_err": ec, "neck_sup": sweep.sup, "margin": sweep.margin_below_2, "grid": sweep.rows.shape[0]}

    return _timed(2, "density anchors", 30.0, run)


def criterion_3() -> CriterionResult:
    def run():
        c = neck()
        centers = density.default_centers(c)
        scales = np.geomspace(0.05, 2.0, 10)
        times = np.linspace(0.1, 0.5, 5)
        rep = density.monotonicity_check(c, centers, scales, times)
        rep_plane = density.monotonicity_check(profile.straight_line(0.4), centers[:5], scales[::3], times[::2])
        worst = max(rep.max_violation, rep_plane.max_violation)
        return worst <= 1e-6, {"max_excess": worst, "queries": rep.n_queries + rep_plane.n_queries}

    return _timed(3, "monotonicity", 30.0, run)


def criterion_4(ds: float = 0.01, neck_radius: float = 0.05) -> CriterionResult:
    def run():
        rays = EquivariantRayPair(*NECK_RAYS)
        ref = neck(ds)
        a = flow.run_from_cone(rays, 0.5, desingularization_radius=neck_radius, ds=ds)
        b = flow.run_from_cone(rays, 0.5, desingularization_radius=neck_radius / 2, ds=ds)
        clip = 5.0
        da = flow.hausdorff(a.state.points, ref.gamma, clip)
        db = flow.hausdorff(b.state.points, ref.gamma, clip)
        dab = flow.hausdorff(a.state.points, b.state.points, clip)
        ok = da < 5e-3 and dab < 5e-3
        return ok, {"to_shoot": da, "to_shoot_half_neck": db, "neck_halving_change": dab}

    return _timed(4, "cross-oracle uniqueness", 300.0, run)


def criterion_5() -> CriterionResult:
    def run():
        d1 = flow.self_similarity_check(neck(0.01), 0.25).max_defect
        d2 = flow.self_similarity_check(neck(0.005), 0.25).max_defect
        order = math.log2(d1 / d2)
        return (d1 < 1e-2 and d2 < 2.5e-3 and order >= 1.9), {"defect_ds1e-2": d1, "defect_ds5e-3": d2, "order": order}

    return _timed(5, "self-similarity", None, run)


def criterion_6() -> CriterionResult:
    def run():
        line = profile.straight_line(0.0, radius=8.0)
        errs = [abs(linop.eigenvalue_nearest(linop.OperatorGrid(line, 0, h, 8.0), -4.0) + 4) for h in (0.04, 0.02, 0.01)]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        c = neck(0.01, 7.5)
        sig, drift_h, drift_r = [], [], []
        for k in range(5):
            g = linop.OperatorGrid(c, k, 0.02, 6.0)
            s1 = linop.smallest_singular_value(g)
            s2 = linop.smallest_singular_value(g.refined())
            s3 = linop.smallest_singular_value(linop.OperatorGrid(c, k, 0.02, 7.0))
            sig.append(s1)
            drift_h.append(abs(s2 - s1) / s1)
            drift_r.append(abs(s3 - s1) / s1)
        f = lambda s: np.exp(-(s**2)) * (1 + s)
        q = lambda s: np.exp(-((s - 0.3) ** 2) / 0.5) * np.cos(2 * s)
        defects = []
        for h in (0.04, 0.02):
            g = linop.OperatorGrid(c, 1, h, 6.0)
            defects.append(linop.adjoint_defect(g, f(g.s), q(g.s)))
        adj_ratio = defects[0] / defects[1]
        ok = (
            all(3.5 <= r <= 4.5 for r in ratios)
            and min(sig) > 0
            and max(drift_h + drift_r) < 0.2
            and adj_ratio > 3.5
        )
        return ok, {
            "eig_err_ratios": ratios,
            "sigma_min_modes0-4": sig,
            "max_drift": max(drift_h + drift_r),
            "adjoint_defect": defects,
            "adjoint_ratio": adj_ratio,
        }

    return _timed(6, "spectral anchors", None, run)


def accepted_expanders():
    """Accepted profiles used for the pointwise checks: plane, necks of several sweeps and a reflection."""
    out = [profile.straight_line(0.4)]
    for rays in (NECK_RAYS, (0.3, 0.3 + math.pi / 4), (0.0, 0.9 * math.pi)):
        c = neck(0.01, 6.0, rays)
        out += [c, c.reflected()]
    return [c for c in out if profile.accept(c).accepted]


def criterion_7() -> CriterionResult:
    def run():
        curves = accepted_expanders()
        excess = max(linop.barrier_check(c).max_excess for c in curves)
        osc = max(profile.oscillation(profile.beta_theta_sum(c)) for c in curves)
        return (excess <= 0 and osc < 1e-6 and len(curves) == 7), {"profiles": len(curves), "max_barrier_excess": excess, "max_beta_theta_osc": osc}

    return _timed(7, "barrier and exactness", None, run)


def criterion_8() -> CriterionResult:
    def run():
        fit = profile.fit_decay(neck())
        ok = fit.slope <= -0.25 + 0.02 and fit.exponential_preferred
        return ok, {"slope": fit.slope, "stderr": fit.b_stderr, "rss_exp": fit.rss_exponential, "rss_poly": fit.rss_polynomial}

    return _timed(8, "decay", None, run)


def criterion_9() -> CriterionResult:
    def run():
        rep = linop.linearization_check(neck())
        return (rep.relative_error < 1e-3 and rep.order >= 1.9), {"relative_error": rep.relative_error, "defects": rep.defects, "order": rep.order}

    return _timed(9, "linearization", None, run)


def criterion_10() -> CriterionResult:
    def run():
        c = neck()
        pert = profile.ProfileCurve(c.s, c.r + 0.01 * np.sin(c.s), c.phi, c.psi, c.rays)
        res = profile.residual_selfexpander(pert)
        residual_fires = res > 1e-3 and not profile.accept(pert).accepted

        plane = profile.straight_line(0.0, radius=8.0)
        s_plane = linop.smallest_singular_value(linop.OperatorGrid(plane, 0, 0.02, 8.0), mass=+2.0)
        neck_reports = [linop.stability_check(linop.OperatorGrid(c, k, 0.02, 5.0), mass=+2.0) for k in range(5)]
        operator_fires = s_plane < 1e-6 and not all(r.stable for r in neck_reports)

        mu_val = abs(geom.mu(np.array([1.0, 1j])))
        rng = np.random.default_rng(1)
        cloud = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
        mu_fires = mu_val > 0.5 and np.max(np.abs(geom.mu(cloud))) > 1e-3
        ok = residual_fires and operator_fires and mu_fires
        return ok, {
            "perturbed_residual": res,
            "plane_sigma_mass+2": s_plane,
            "neck_min_l2_sigma_mass+2": min(r.sigma_l2 for r in neck_reports),
            "mu(1,i)": mu_val,
        }

    return _timed(10, "mutation detection", None, run)


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
)


def run_all(numbers=None) -> list[CriterionResult]:
    numbers = range(1, len(CRITERIA) + 1) if numbers is None else numbers
    return [CRITERIA[n - 1]() for n in numbers]
