import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expanders import linop as L
from expanders import profile as P
from expanders.errors import DomainError, StepTooLargeError


@pytest.fixture(scope="module")
def plane():
    return P.straight_line(0.0, radius=8.0)


# --- grids -----------------------------------------------------------------------------


def test_grid_validation(neck):
    for kw in ({"h": 0.0}, {"mode": -1}, {"mode": 1.5}, {"radius": 3.0}, {"h": 1.0}):
        with pytest.raises(DomainError):
            L.OperatorGrid(neck, **kw)


def test_plane_grid_is_cell_centred_half_line(plane):
    g = L.OperatorGrid(plane, 0, 0.1, 5.0)
    assert g.axis
    np.testing.assert_allclose(g.r[:3], [0.05, 0.15, 0.25])
    assert g.n == 50


def test_neck_grid_follows_the_profile(neck):
    g = L.OperatorGrid(neck, 0, 0.02, 5.0)
    assert not g.axis
    assert g.r.max() <= 5.0 + 1e-9
    np.testing.assert_allclose(g.r_prime**2 + g.normal_sq / g.r**2, 1.0, atol=1e-12)


# --- spectral anchors on the plane --------------------------------------------------------


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_plane_eigenvalue_converges_at_second_order(plane, k):
    # r^k exp(-r^2/2) solves L f = -(4 + k) f on mode k.
    exact = -(4.0 + k)
    errs = [abs(L.eigenvalue_nearest(L.OperatorGrid(plane, k, h, 8.0), exact) - exact) for h in (0.04, 0.02, 0.01)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_plane_spectrum_is_negative(plane):
    ev = L.eigenvalues(L.OperatorGrid(plane, 0, 0.04, 8.0))
    assert ev.max() < -3.99


def test_gaussian_is_an_eigenvector_of_the_matrix(plane):
    g = L.OperatorGrid(plane, 0, 0.01, 8.0)
    f = np.exp(-g.r**2 / 2)
    inner = g.r < 6.0
    np.testing.assert_allclose((L.assemble(g) @ f)[inner], -4 * f[inner], atol=1e-4)


# --- adjointness -------------------------------------------------------------------------


def test_adjoint_defect_is_second_order(wide_neck):
    f = lambda s: np.exp(-(s**2)) * (1 + s)
    q = lambda s: np.exp(-((s - 0.3) ** 2) / 0.5) * np.cos(2 * s)
    d = [L.adjoint_defect(g, f(g.s), q(g.s)) for g in (L.OperatorGrid(wide_neck, 1, h, 6.0) for h in (0.04, 0.02, 0.01))]
    assert d[0] / d[1] > 3.5 and d[1] / d[2] > 3.5
    assert d[2] < 1e-4


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_adjoint_pairing_small_for_random_smooth_functions(wide_neck, seed, k):
    g = L.OperatorGrid(wide_neck, k, 0.02, 6.0)
    f, q = L.smooth_random_functions(g, 2, seed)
    assert L.adjoint_defect(g, f(g.s), q(g.s)) < 5e-2


def test_adjoint_weight_symmetry(neck):
    # L* is symmetric for the weight r exp(-r^2/2): check on the matrix directly.
    g = L.OperatorGrid(neck, 2, 0.05, 5.0)
    B = L.assemble_adjoint(g).toarray()
    w = g.r * np.exp(-g.r**2 / 2)
    S = w[:, None] * B
    np.testing.assert_allclose(S, S.T, atol=1e-12 * np.abs(S).max())


# --- invertibility -----------------------------------------------------------------------


@pytest.mark.parametrize("k", range(5))
def test_neck_sigma_min_positive_and_stable(wide_neck, k):
    g = L.OperatorGrid(wide_neck, k, 0.02, 6.0)
    rep = L.stability_check(g)
    assert rep.stable
    assert rep.sigma > 0.5
    far = L.smallest_singular_value(L.OperatorGrid(wide_neck, k, 0.02, 7.0))
    assert abs(far - rep.sigma) / rep.sigma < 0.2


def test_plane_sigma_is_radius_independent(plane):
    a = L.smallest_singular_value(L.OperatorGrid(plane, 0, 0.02, 6.0))
    b = L.smallest_singular_value(L.OperatorGrid(plane, 0, 0.02, 8.0))
    assert a == pytest.approx(b, rel=1e-3)
    with pytest.raises(DomainError):
        L.smallest_singular_value(L.OperatorGrid(plane, 0, 0.02, 6.0), space="h3")


def test_wrong_mass_breaks_invertibility(plane, neck):
    # mass +2 turns the Gaussian into a kernel element on the plane.
    assert L.smallest_singular_value(L.OperatorGrid(plane, 0, 0.02, 8.0), mass=2.0) < 1e-6
    assert not L.stability_check(L.OperatorGrid(neck, 0, 0.02, 5.0), mass=2.0).stable


def test_norms_are_nested(neck):
    g = L.OperatorGrid(neck, 1, 0.02, 5.0)
    f = L.smooth_random_functions(g, 1, 4)[0](g.s)
    n = L.norms(g, f)
    assert 0 < n.l2 <= n.h1 <= n.h2star
    assert n.drift <= n.h2star


def test_coercivity_within_inverse_sigma(neck):
    rep = L.coercivity_check(L.OperatorGrid(neck, 0, 0.02, 5.0), trials=30)
    assert rep.stable
    assert rep.max_ratio <= rep.bound


# --- barrier and linearisation -------------------------------------------------------------


def test_barrier_on_plane_and_neck(plane, neck):
    for base in (plane, neck, neck.reflected()):
        rep = L.barrier_check(base)
        assert rep.ok
        assert rep.matrix_error < 1e-3
    assert L.barrier_check(neck).strict_where_normal


def test_barrier_closed_form_on_plane(plane):
    # On the plane |x^T| = |x|, so L rho = -4 rho exactly.
    g = L.OperatorGrid(plane, 0, 0.05, 6.0)
    rho, lrho = L.barrier_values(g)
    np.testing.assert_allclose(lrho, -4 * rho, atol=1e-14)


def test_linearization_matches_operator(neck):
    rep = L.linearization_check(neck)
    assert rep.relative_error < 1e-3
    assert rep.order >= 1.9


def test_linearization_rejects_large_steps(neck):
    with pytest.raises(StepTooLargeError):
        L.linearization_check(neck, epsilons=(2.0, 1.0))
    with pytest.raises(DomainError):
        L.linearization_check(neck, epsilons=(1e-2, 1e-3))


def test_closed_form_operator_on_plane_gaussian():
    line = P.straight_line(0.0, radius=6.0)
    r = line.r
    e = np.exp(-r * r / 2)
    # the line's u flips by pi across the origin; use the outgoing half
    out = line.s > 0
    lf = L.closed_form_operator(line, e, -line.s * e, (line.s**2 - 1) * e)
    np.testing.assert_allclose(lf[out], -4 * e[out], atol=1e-12)


# --- radial growth -----------------------------------------------------------------------


def test_radial_growth_threshold():
    # f ~ r^{2+2p} for eta = r^p, so r f' / (3 f) = (2 + 2p) / 3: equality at p = 1/2.
    cube = L.radial_growth_check(lambda r: r**3, lambda r: 3 * r**2)
    assert np.all(cube.holds)
    # |grad eta|^2 dominates near 0 (ratio 2); eta^2 dominates far out (ratio 8/3)
    assert cube.ratio[-1] == pytest.approx((1e8 + 3e6) / (3 * (1e8 / 8 + 1e6 / 2)), rel=1e-6)
    root = L.radial_growth_check(np.sqrt, lambda r: 0.5 / np.sqrt(np.maximum(r, 1e-300)))
    assert root.ratio[-1] == pytest.approx(1.0, abs=5e-3)
    gauss = L.radial_growth_check(lambda r: np.exp(-(r**2)), lambda r: -2 * r * np.exp(-(r**2)))
    assert not np.all(gauss.holds)
    with pytest.raises(DomainError):
        L.radial_growth_check(np.cos, np.sin, n=3)


def test_spectrum_record_schema(neck):
    rec = L.spectrum_record(L.OperatorGrid(neck, 1, 0.05, 5.0))
    assert set(rec) == {"mode", "sigma_min", "eigenvalues_nearest_zero", "grid"}
    assert rec["grid"] == {"h": 0.05, "R": 5.0}
    assert json.loads(L.spectrum_json([rec]))[0]["mode"] == 1
    assert math.isfinite(rec["sigma_min"])
