import math

import numpy as np
import pytest

from expanders import flow as F
from expanders import profile as P
from expanders.errors import DomainError, StepRejected
from expanders.geom import EquivariantRayPair

from .conftest import NECK_RAYS

RAYS = EquivariantRayPair(*NECK_RAYS)


@pytest.fixture(scope="module")
def coarse_neck():
    return P.shoot(P.ShootingProblem(RAYS, step=0.02, radius=5.0))


@pytest.fixture(scope="module")
def coarse_run():
    return F.run_from_cone(RAYS, 0.5, ds=0.02, radius=5.0, snapshot_times=[0.1, 0.25])


def arc(rho, n=400, span=2.0):
    t = np.linspace(-span / 2, span / 2, n)
    return rho * np.exp(1j * t)


# --- velocity --------------------------------------------------------------------------


@pytest.mark.parametrize("rho", [0.5, 1.0, 3.0])
def test_round_circle_moves_inward_at_torus_curvature(rho):
    # the surface of a circle is minimal in the 3-sphere of radius rho: H = -2 x / rho^2
    p = arc(rho)
    v = F.velocity(p)[1:-1]
    np.testing.assert_allclose(v, -2 * p[1:-1] / rho**2, rtol=1e-4)


def test_expander_velocity_is_its_normal_position(neck):
    p = neck.gamma
    T = neck.tangent
    normal_pos = (np.conj(1j * T) * p).real * 1j * T
    v = F.velocity(p)
    inner = slice(5, -5)
    assert np.max(np.abs(v[inner] - normal_pos[inner])) < 1e-3


def test_line_is_fixed_by_a_step():
    st = F.FlowState(P.straight_line(0.7, radius=4.0, step=0.02).gamma, 0.0)
    nxt = F.flow_step(st, 0.4 * st.ds**2)
    assert np.max(np.abs(nxt.points - st.points)) < 1e-13
    assert nxt.t == pytest.approx(0.4 * st.ds**2)


def test_step_bound_enforced():
    st = F.FlowState(arc(1.0), 0.0)
    with pytest.raises(StepRejected):
        F.flow_step(st, st.ds**2)
    with pytest.raises(StepRejected):
        F.flow_step(st, -1e-6)
    with pytest.raises(StepRejected):
        F.evolve(st, 0.1, dt=st.ds**2)


def test_state_validation():
    with pytest.raises(DomainError):
        F.FlowState(np.array([1, 2, 0, 3, 4]), 0.0)
    with pytest.raises(DomainError):
        F.FlowState(arc(1.0, n=4), 0.0)
    with pytest.raises(DomainError):
        F.FlowState(arc(1.0), -1.0)


# --- resampling and geometry -------------------------------------------------------------


def test_resampling_stays_on_the_curve():
    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(-1, 1, 300))
    t[0], t[-1] = -1, 1
    q = F.resample_uniform(np.exp(1j * t))
    np.testing.assert_allclose(np.abs(q), 1.0, atol=1e-7)
    steps = np.abs(np.diff(q))
    assert np.ptp(steps) < 1e-3 * steps.mean()


def test_mollified_cone_shape():
    for sign in (1, -1):
        rays = RAYS if sign > 0 else RAYS.reflected()
        z = F.mollified_cone(rays, 0.1, 0.01, 5.0)
        # the vertex falls between samples
        assert np.min(np.abs(z)) == pytest.approx(0.1, abs=1e-3)
        assert abs(z[0]) == pytest.approx(5.0, rel=1e-3) and abs(z[-1]) == pytest.approx(5.0, rel=1e-3)
        far = np.abs(z) > 1.0
        ang = np.angle(z[far])
        # far points lie exactly on the two target lines
        lo, hi = rays.targets()
        d = np.minimum(np.abs(np.sin(ang - lo)), np.abs(np.sin(ang - hi)))
        assert d.max() < 1e-9
    with pytest.raises(DomainError):
        F.mollified_cone(RAYS, 0.0)


def test_hausdorff_of_parallel_segments():
    x = np.linspace(-1, 1, 50)
    assert F.hausdorff(x + 0j, x + 0.3j) == pytest.approx(0.3)
    assert F.hausdorff(x + 0j, np.linspace(-1, 2, 70) + 0j) == pytest.approx(1.0)
    assert F.hausdorff(x + 0j, np.linspace(-1, 2, 70) + 0j, clip_radius=1.0) == pytest.approx(0.0, abs=1e-12)


# --- runs --------------------------------------------------------------------------------


def test_cone_flow_converges_to_the_shot_expander(coarse_run, coarse_neck):
    d = F.hausdorff(coarse_run.state.points, coarse_neck.gamma, clip_radius=3.5)
    assert d < 1e-2
    assert [s.t for s in coarse_run.snapshots] == [0.1, 0.25]
    assert coarse_run.state.t == 0.5


def test_manifest_fields(coarse_run):
    m = coarse_run.manifest()
    assert set(m) == {"rays", "dt", "ds", "times"}
    assert m["dt"] == pytest.approx(0.4 * m["ds"] ** 2)


def test_flow_stays_equivariant(coarse_run):
    rep = F.mu_conservation_check(coarse_run.snapshots)
    assert rep.ok() and rep.n_states == 2


def test_density_monotone_along_flow(coarse_run):
    centers = [np.zeros(2, complex), np.array([0.3, 0.0]), np.array([0.2 + 0.1j, -0.3j])]
    worst = F.density_monotonicity(coarse_run.snapshots, RAYS, centers, [0.1, 0.5, 1.0])
    assert worst <= 1e-6


def test_rescaling_to_half_time():
    run = F.run_from_cone(EquivariantRayPair(0.0, math.pi), 0.02, ds=0.05, radius=4.0)
    assert run.state.t == 0.5
    with pytest.raises(DomainError):
        F.run_from_cone(RAYS, 0.0)


def test_expander_flows_self_similarly(coarse_neck):
    rep = F.self_similarity_check(coarse_neck, 0.1, n_checks=2)
    assert rep.max_defect < 1e-3
    assert rep.taus == pytest.approx((0.05, 0.1))


def test_perturbed_profile_is_not_self_similar(coarse_neck):
    c = coarse_neck
    bumped = c.gamma * (1 + 0.05 * np.exp(-(c.s**2)))
    pert = P.ProfileCurve.from_points(bumped, c.rays)
    clean = F.self_similarity_check(c, 0.1, n_checks=2).max_defect
    dirty = F.self_similarity_check(pert, 0.1, n_checks=2).max_defect
    assert dirty > 10 * clean
