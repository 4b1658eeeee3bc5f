import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expanders import geom
from expanders.errors import DomainError, InvalidFrameError
from expanders.geom import EquivariantRayPair, PlanePair

from .conftest import wrap

angle = st.floats(-10, 10, allow_nan=False)
transverse = st.floats(0.05, math.pi - 0.05)


def test_plane_pair_reduces_angles_into_half_open_period():
    p = PlanePair(math.pi + 0.3, -0.2)
    assert p.theta1 == pytest.approx(0.3)
    assert p.theta2 == pytest.approx(math.pi - 0.2)


@pytest.mark.parametrize("t1,t2", [(0.0, 1.0), (1.0, math.pi), (1.0, 2 * math.pi * (1 + 1e-12))])
def test_plane_pair_rejects_shared_lines(t1, t2):
    with pytest.raises(DomainError):
        PlanePair(t1, t2)


def test_plane_pair_json_round_trip():
    p = PlanePair(0.7, 2.1)
    assert PlanePair.from_json(p.to_json()) == p
    assert set(json.loads(p.to_json())) == {"theta1", "theta2"}


def test_distances_to_the_two_planes():
    p = PlanePair(math.pi / 2, math.pi / 2)  # P2 = i R^2
    x = np.array([1 + 2j, -3 + 0.5j])
    d1, d2 = p.distances(x)
    assert d1 == pytest.approx(math.hypot(2, 0.5))
    assert d2 == pytest.approx(math.hypot(1, 3))


def test_frame_validation():
    with pytest.raises(InvalidFrameError):
        geom.LagrangianFrame([1, 0], [1j, 0])  # not Lagrangian
    with pytest.raises(InvalidFrameError):
        geom.LagrangianFrame([2, 0], [0, 1])


@given(transverse, transverse)
def test_lagrangian_angle_of_diagonal_plane_is_the_angle_sum(t1, t2):
    pair = PlanePair(t1, t2)
    f1, f2 = pair.frames()
    diff = geom.lagrangian_angle(f2) - geom.lagrangian_angle(f1)
    assert wrap(diff - (pair.theta1 + pair.theta2)) < 1e-12


@given(angle, angle, angle)
def test_lagrangian_angle_invariant_under_rotation_within_plane(t1, t2, a):
    f = geom.plane_frame(t1, t2)
    rotated = geom.LagrangianFrame(math.cos(a) * f.u + math.sin(a) * f.v, -math.sin(a) * f.u + math.cos(a) * f.v)
    assert wrap(geom.lagrangian_angle(rotated) - geom.lagrangian_angle(f)) < 1e-12


@given(angle, angle)
def test_lagrangian_angle_in_principal_branch(t1, t2):
    a = geom.lagrangian_angle(geom.plane_frame(t1, t2))
    assert -math.pi < a <= math.pi


@given(transverse, transverse, st.floats(0, 1))
def test_rotation_path_keeps_angle_sum(t1, t2, s):
    pair = PlanePair(t1, t2)
    if geom.area_minimizing_pair(pair):
        return
    q = geom.rotation_path(pair, s)
    assert wrap(q.angle_sum - pair.angle_sum, math.pi) < 1e-12
    assert geom.area_minimizing_pair(q) is False


def test_rotation_path_endpoints():
    pair = PlanePair(0.4, 1.2)
    assert geom.rotation_path(pair, 0.0) == pair
    end = geom.rotation_path(pair, 1.0)
    assert end.theta1 == pytest.approx(end.theta2)
    with pytest.raises(DomainError):
        geom.rotation_path(pair, 1.5)
    with pytest.raises(DomainError):
        geom.rotation_path(PlanePair(0.5, math.pi - 0.5), 0.3)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 2 * math.pi))
def test_mu_vanishes_on_equivariant_points(x, y, alpha):
    assert abs(geom.mu(geom.embed(complex(x, y), alpha))) <= 1e-12 * (1 + x * x + y * y)


def test_mu_detects_a_non_equivariant_point():
    assert geom.mu(np.array([1.0, 1j])) == 1.0


@given(st.floats(0.2, 3), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(0, 2 * math.pi))
def test_equivariant_frame_is_lagrangian_with_angle_from_the_profile(r, phi, tangent_dir, alpha):
    # theta = arg(gamma') + arg(gamma) on the surface, independent of alpha.
    gamma = r * np.exp(1j * phi)
    dgamma = np.exp(1j * tangent_dir)
    u, v = geom.equivariant_frame(gamma, dgamma, alpha)
    theta = geom.lagrangian_angles(u, v)
    assert wrap(float(theta) - (tangent_dir + phi)) < 1e-10


def test_liouville_of_position_along_itself_vanishes():
    x = np.array([1 + 2j, -0.5 + 1j])
    assert geom.liouville_eval(x, x) == pytest.approx(0.0, abs=1e-15)
    assert geom.liouville_eval(x, 1j * x) == pytest.approx(float(np.sum(np.abs(x) ** 2)))


def test_unwrap_guard():
    a = np.array([3.0, -3.1, 3.05])
    out = geom.unwrap_angles(a)
    assert np.max(np.abs(np.diff(out))) < 0.2
    with pytest.raises(DomainError):
        geom.unwrap_angles([0.0, 1.7, 3.4])


class TestRays:
    def test_plane_and_separation(self):
        assert EquivariantRayPair(0.0, math.pi).is_plane
        assert EquivariantRayPair(0.0, 2 * math.pi / 3).separation == pytest.approx(2 * math.pi / 3)

    def test_coincident_rays_rejected(self):
        with pytest.raises(DomainError):
            EquivariantRayPair(1.0, 1.0 + 2 * math.pi)

    def test_sweep_goes_the_short_way(self):
        assert EquivariantRayPair(0.0, 2 * math.pi / 3).sweep() == pytest.approx(-math.pi / 3)
        assert EquivariantRayPair(0.3, 0.3 + math.pi / 4).sweep() == pytest.approx(math.pi / 4)

    def test_area_minimizing_rays_have_no_sweep(self):
        r = EquivariantRayPair(0.0, math.pi / 2)
        assert r.is_area_minimizing
        with pytest.raises(DomainError):
            r.sweep()

    @given(st.floats(-3, 3), st.floats(0.05, math.pi - 0.05))
    def test_sweep_reaches_the_second_line(self, a, d):
        r = EquivariantRayPair(a, a + d)
        if r.is_area_minimizing:
            return
        lo, hi = r.targets()
        assert abs(hi - lo) < math.pi / 2
        assert EquivariantRayPair(lo, hi).line_mismatch(r) < 1e-12

    def test_reflection_and_mismatch(self):
        r = EquivariantRayPair(0.2, 1.0)
        assert r.reflected().line_mismatch(EquivariantRayPair(-0.2, -1.0 + math.pi)) < 1e-15
        assert r.plane_pair() == PlanePair(0.8, 0.8)
        with pytest.raises(DomainError):
            EquivariantRayPair(0.0, math.pi).plane_pair()
