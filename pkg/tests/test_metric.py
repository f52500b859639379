import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinmetric.domains import NormalizationMap, ball, ellipsoid, halfspace
from robinmetric.metric import (MetricError, affine_pullback_check, affine_pullback_deviation,
                                cofactor_expansion_det, cofactor_matrix, inverse_det_cofactors,
                                kahler_symmetry_residual, metric_data, metric_derivative,
                                metric_tensor)
from robinmetric.robin import (BallRobin, MfsRobin, RobinEval, make_backend, mfs_build,
                               robin_ball, robin_derivatives)

from conftest import SHARED_MFS, normalized_ball, unit


def ball_points(n, count, seed, rmax=0.8):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    z /= np.linalg.norm(z, axis=1)[:, None]
    return z * (rmax * rng.random(count) ** (1 / (2 * n)))[:, None]


def test_ball_centre_is_twice_identity():
    g = metric_tensor(robin_ball(np.zeros(2)))
    assert np.allclose(g, 2 * np.eye(2), atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_ball_normal_line_scaling(n):
    for t in (0.3, 0.9, 0.99):
        p = t * unit(n, n - 1)
        md = metric_data(robin_ball(p))
        psi = t**2 - 1
        assert md.g[n - 1, n - 1].real * psi**2 == pytest.approx(2 * n - 2, rel=1e-10)
        assert md.det * psi ** (n + 1) == pytest.approx((-1) ** (n - 1) * (2 * n - 2) ** n, rel=1e-9)
        assert md.g_inv[n - 1, n - 1].real / psi**2 == pytest.approx(1 / (2 * n - 2), rel=1e-9)
        assert np.allclose(md.g - np.diag(np.diag(md.g)), 0, atol=1e-12 * abs(md.g).max())


def test_halfspace_metric_is_degenerate_and_warns():
    spec = halfspace([0, 1])
    be = make_backend("halfspace", spec)
    p = np.array([0.3 + 0.1j, 0.2 - 0.4j])
    with pytest.warns(RuntimeWarning, match="positive definite"):
        md = metric_data(robin_derivatives(be, spec, p, 3))
    assert not md.positive_definite
    expected = np.zeros((2, 2))
    expected[1, 1] = 2 / (1 - 2 * 0.2) ** 2
    assert np.allclose(md.g, expected, atol=1e-12)
    with pytest.raises(MetricError):
        metric_data(robin_derivatives(be, spec, p, 3), strict=True)


def test_metric_needs_second_derivatives():
    with pytest.raises(MetricError):
        metric_tensor(robin_ball(np.zeros(2), order=1))


def test_metric_needs_negative_lambda():
    re = robin_ball(np.zeros(2))
    bad = RobinEval(re.point, 1.0, re.d1, re.d2, re.d3, re.psi, "ball")
    with pytest.raises(MetricError):
        metric_tensor(bad)


def test_derivative_vanishes_at_centre():
    dg = metric_derivative(robin_ball(np.zeros(3)))
    assert np.max(np.abs(dg)) < 1e-14
    assert kahler_symmetry_residual(dg) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_kahler_symmetry_closed_form(seed, n):
    p = ball_points(n, 1, seed)[0]
    assert kahler_symmetry_residual(metric_derivative(robin_ball(p))) <= 1e-8


def test_kahler_symmetry_mfs(mfs_ellipsoid21, ellipsoid21):
    for p in ([0.1, 0.2j], [-0.15 + 0.05j, 0.3]):
        re = robin_derivatives(mfs_ellipsoid21, ellipsoid21, p, 3)
        assert kahler_symmetry_residual(metric_derivative(re)) <= 1e-2


@pytest.mark.parametrize("n", [2, 3])
def test_derivative_matches_difference_of_metric(n):
    p = ball_points(n, 1, 7)[0]
    dg = metric_derivative(robin_ball(p))
    h = 1e-4
    for c in range(n):
        e = unit(n, c)

        def diff(direction):
            gp = metric_tensor(robin_ball(p + h * direction))
            gm = metric_tensor(robin_ball(p - h * direction))
            return (gp - gm) / (2 * h)

        fd = 0.5 * (diff(e) - 1j * diff(1j * e))
        assert np.max(np.abs(fd - dg[c])) <= 1e-7 * max(1.0, np.max(np.abs(dg)))


def test_inverse_det_cofactors_example():
    g = 2 * np.eye(2, dtype=complex)
    g_inv, det, C = inverse_det_cofactors(g)
    assert det == pytest.approx(4.0)
    assert np.allclose(g_inv, 0.5 * np.eye(2))
    assert np.allclose(C, 2 * np.eye(2))


def test_inverse_rejects_bad_input():
    with pytest.raises(MetricError):
        inverse_det_cofactors(np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(MetricError):
        inverse_det_cofactors(np.ones((2, 2), complex))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_cofactor_expansion_and_adjugate(seed, n):
    p = ball_points(n, 1, seed)[0]
    md = metric_data(robin_ball(p))
    assert md.positive_definite
    for row in range(n):
        assert abs(cofactor_expansion_det(md.g, md.cofactors, row) - md.det) <= 1e-10 * abs(md.det)
    adj = md.cofactors.T / md.det
    assert np.max(np.abs(md.g_inv - adj)) <= 1e-9 * np.max(np.abs(md.g_inv))
    assert np.allclose(md.g @ md.g_inv, np.eye(n), atol=1e-10)


def test_cofactor_matrix_one_by_one():
    assert cofactor_matrix(np.array([[3.0 + 0j]]))[0, 0] == 1.0


def test_constant_multiple_of_lambda_leaves_metric_unchanged():
    re = robin_ball(np.array([0.2, -0.1j, 0.3]))
    k = 7.5
    scaled = RobinEval(re.point, k * re.lambda_big, k * re.d1, k * re.d2, k * re.d3, re.psi, "ball")
    assert np.allclose(metric_tensor(scaled), metric_tensor(re), rtol=1e-13, atol=0)
    assert np.allclose(metric_derivative(scaled), metric_derivative(re), rtol=1e-12, atol=1e-15)


def test_radius_scaling():
    p = np.array([0.2 + 0.1j, -0.3])
    r = 2.5
    g_r = metric_tensor(robin_ball(r * p, r))
    assert np.allclose(g_r * r**2, metric_tensor(robin_ball(p)), rtol=1e-12)


def _rotation(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q


@pytest.mark.parametrize("n", [2, 3])
def test_pullback_closed_form_rotation(n):
    U = _rotation(n, n)
    shift = 0.4 * unit(n, 0)
    nmap = NormalizationMap(shift, U)
    spec = ball(n)
    # image of the unit ball under w = U (z - shift) is the unit ball about -U shift
    image = BallRobin(-U @ shift, 1.0)
    pts = ball_points(n, 20, 11, 0.7)
    worst = 0.0
    for p in pts:
        g0 = metric_tensor(robin_ball(p))
        F0, d1, d2, d3 = image.analytic(nmap.forward(p), 2)
        g1 = metric_tensor(RobinEval(nmap.forward(p), float(F0), d1, d2, None, -1.0, "ball"))
        worst = max(worst, affine_pullback_deviation(g0, g1, U))
    assert worst <= 1e-10


def test_pullback_normalized_ball():
    n = 2
    spec = ball(n)
    from robinmetric.domains import normalize_dagger

    nmap, image = normalize_dagger(spec, unit(n, n - 1))
    pts = ball_points(n, 20, 5, 0.7)
    dev = affine_pullback_check(BallRobin.from_spec(spec), BallRobin.from_spec(image),
                                spec, image, nmap, pts)
    assert dev <= 1e-10


def test_pullback_mfs_ball_rotation(mfs_ball2, ball2):
    U = _rotation(2, 3)
    nmap = NormalizationMap(np.zeros(2, complex), U)
    # MFS metric deviation grows from 1e-6 at |p| = 0.4 to 8e-4 at 0.6 on this layout
    pts = ball_points(2, 6, 2, 0.4)
    dev = affine_pullback_check(BallRobin.from_spec(ball2), mfs_ball2, ball2, ball2, nmap, pts)
    assert dev <= 1e-4


@pytest.mark.slow
def test_pullback_mfs_axis_permutation(mfs_ellipsoid21, ellipsoid21):
    image = ellipsoid([1.0, 2.0])
    image_be = MfsRobin(mfs_build(image, seed=1, **SHARED_MFS), image)
    U = np.array([[0, 1], [1, 0]], complex)
    nmap = NormalizationMap(np.zeros(2, complex), U)
    pts = [np.array(p, complex) for p in ([0.1, 0.2j], [-0.2, 0.1 + 0.1j], [0.05j, -0.3])]
    dev = affine_pullback_check(mfs_ellipsoid21, image_be, ellipsoid21, image, nmap, pts)
    assert dev <= 1e-4


def test_metric_data_serializes():
    md = metric_data(robin_ball(np.array([0.1, 0.2j])))
    d = md.to_dict()
    assert d["positive_definite"] is True
    assert np.array(d["g"]).shape == (2, 2, 2)
    assert np.array(d["dg"]).shape == (2, 2, 2, 2)


def test_normalized_ball_metric_is_positive(recwarn):
    spec = normalized_ball(3)
    be = BallRobin.from_spec(spec)
    md = metric_data(robin_derivatives(be, spec, -0.1 * unit(3, 2), 3))
    assert md.positive_definite
    assert not [w for w in recwarn if issubclass(w.category, RuntimeWarning)]
