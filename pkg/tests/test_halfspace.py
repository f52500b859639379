import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinmetric.domains import custom_polynomial, normalize_dagger, ball
from robinmetric.fd import wirtinger_derivatives
from robinmetric.halfspace import (HalfSpaceModel, g0_eval, g0_wirtinger_derivative, g_alpha_eval,
                                   g_alpha_w_derivative, halfspace_green, halfspace_robin, k1,
                                   symmetric_point, variation_kernel_f)

from conftest import unit

vec = st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4).map(
    lambda v: np.array(v[:2]) + 1j * np.array(v[2:]))
normals = vec.filter(lambda b: np.linalg.norm(b) > 0.1)


def model_en(n):
    return HalfSpaceModel(unit(n, n - 1))


def complex_derivative(f, w, h=1e-3):
    """Combined-index Wirtinger gradient of a complex function via its real and imaginary parts."""
    _, dr, _, _ = wirtinger_derivatives(lambda P: f(P).real, w, h, 1)
    _, di, _, _ = wirtinger_derivatives(lambda P: f(P).imag, w, h, 1)
    return dr + 1j * di


# --- reflection and Green function -------------------------------------------

def test_symmetric_point_examples():
    m = model_en(2)
    assert np.allclose(symmetric_point(m, np.zeros(2)), [0, 1])
    assert np.allclose(symmetric_point(m, np.array([0, 0.5])), [0, 0.5])
    w = np.array([0.3 - 0.2j, -0.4 + 0.7j])
    assert np.allclose(symmetric_point(m, w), [w[0], (1 - w[1].real) + 1j * w[1].imag])
    assert np.allclose(m.origin_image, [0, 1])


@settings(max_examples=40, deadline=None)
@given(normals, vec)
def test_symmetric_point_is_involution(b, p):
    m = HalfSpaceModel(b)
    ps = symmetric_point(m, p)
    assert np.allclose(symmetric_point(m, ps), p, atol=1e-10)
    assert m.level(ps) == pytest.approx(-m.level(p), abs=1e-10)


def test_green_value():
    g = halfspace_green(model_en(2), np.zeros(2), np.array([0, 0.25]))
    assert g == pytest.approx(16 - 16 / 9, rel=1e-14)
    assert g == pytest.approx(14.2222, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(normals, vec, vec)
def test_green_vanishes_on_boundary_and_is_symmetric(b, p, z):
    m = HalfSpaceModel(b)
    bb = np.vdot(b, b).real
    # level(x - s conj(b)) = level(x) - 2 s |b|^2
    p = p - (max(m.level(p), 0) + 0.2) / (2 * bb) * b.conj()
    z = z - (max(m.level(z), 0) + 0.3) / (2 * bb) * b.conj()
    if np.linalg.norm(z - p) < 1e-2:
        return
    zb = z - m.level(z) / (2 * bb) * b.conj()
    assert abs(m.level(zb)) < 1e-12
    scale = np.linalg.norm(zb - p) ** (-(2 * m.n - 2))
    assert abs(halfspace_green(m, p, zb)) <= 1e-12 * scale
    assert halfspace_green(m, p, z) == pytest.approx(halfspace_green(m, z, p), rel=1e-12)


def test_green_refuses_pole():
    with pytest.raises(ValueError):
        halfspace_green(model_en(2), np.zeros(2), np.zeros(2))


@pytest.mark.parametrize("b,p,expected", [
    (unit(2, 1), np.zeros(2), -1.0),
    (unit(3, 2), np.zeros(3), -1.0),
    (unit(4, 3), np.zeros(4), -1.0),
    (unit(2, 1), np.array([0, -0.5]), -0.25),
    (2 * unit(2, 1), np.zeros(2), -4.0),
])
def test_robin_examples(b, p, expected):
    assert halfspace_robin(HalfSpaceModel(b), p) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_robin_is_regular_part_limit(n):
    rng = np.random.default_rng(n)
    m = HalfSpaceModel(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    p = -0.1 * m.b.conj()
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u /= np.linalg.norm(u)
    # symmetric pairs leave a series in h^2; small h is limited by cancellation against h^(2-2n)
    hs = 0.2 * 0.5 ** np.arange(4)
    vals = [0.5 * (halfspace_green(m, p, p + h * u) + halfspace_green(m, p, p - h * u))
            - h ** (-(2 * n - 2)) for h in hs]
    limit = np.polyval(np.polyfit(hs**2, vals, 3), 0.0)
    exact = halfspace_robin(m, p)
    assert abs(limit - exact) <= 1e-8 * abs(exact)


def test_robin_refuses_exterior_point():
    with pytest.raises(ValueError):
        halfspace_robin(model_en(2), np.array([0, 0.5]))


# --- variation kernel ------------------------------------------------------------

def test_variation_kernel_on_normalized_ball():
    spec = normalize_dagger(ball(2), unit(2, 1))[1]
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert variation_kernel_f(spec, np.zeros(2), z) == pytest.approx(2 * z[1].real - 1, abs=1e-13)
    z = np.array([0.7 - 0.3j, 0.5 + 2.0j])
    assert variation_kernel_f(spec, np.zeros(2), z) == pytest.approx(0.0, abs=1e-13)


def test_variation_kernel_defines_rescaled_domain():
    # away from the boundary f(p, .) vanishes exactly on the image of the boundary under w -> (z - p)/(-psi(p))
    spec = ball(2)
    p = np.array([0.2, -0.3j])
    t = -spec.psi(p)
    rng = np.random.default_rng(1)
    for _ in range(5):
        u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        zeta = u / np.linalg.norm(u)
        w = (zeta - p) / t
        assert variation_kernel_f(spec, p, w) == pytest.approx(0.0, abs=1e-12)


def test_k1_kernel_formula():
    s, t = 0.3 + 0.1j, 0.2 - 0.4j
    z0 = (0, 0)
    e1, e2 = (1, 0), (0, 1)
    terms = [(1.0, e2, z0), (1.0, z0, e2), (1.0, e2, e2),
             (s, (1, 1), z0), (np.conj(s), z0, (1, 1)),
             (t, e1, e2), (np.conj(t), e2, e1)]
    spec = custom_polynomial(2, terms)
    rng = np.random.default_rng(2)
    for _ in range(5):
        zeta = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert k1(spec, np.zeros(2), zeta, 0) == pytest.approx(s * zeta[1] + t * zeta[1].conj(), abs=1e-12)


def test_kernel_gradient_norm_is_one_under_normalization():
    from robinmetric.halfspace import variation_kernel_grad

    spec = normalize_dagger(ball(3), unit(3, 2))[1]
    for zeta in (np.array([0.3, -0.2j, 0.5]), np.array([1.0, 2.0, 0.5 + 3j])):
        _, dw = variation_kernel_grad(spec, np.zeros(3), zeta)
        assert np.linalg.norm(dw) == pytest.approx(1.0, abs=1e-13)


# --- harmonic auxiliaries -----------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_g0_at_origin(n):
    assert g0_eval(model_en(n), np.zeros(n)) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_g0_matches_its_defining_combination(n):
    """g + (1/(n-1)) sum w_i dg/dw_i with g the Green function with pole 0 (singularity cancels)."""
    rng = np.random.default_rng(n)
    m = HalfSpaceModel(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for _ in range(4):
        w = 0.1 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        w -= (max(m.level(w), 0) + 0.2) / (2 * np.vdot(m.b, m.b).real) * m.b.conj()
        green = lambda P: halfspace_green(m, np.zeros(n), P) + 0j  # noqa: E731
        dg = complex_derivative(green, w, h=1e-3 * np.linalg.norm(w))
        raw = green(w) + (w @ dg[:n]) / (n - 1)
        assert raw == pytest.approx(g0_eval(m, w), rel=1e-7)


@pytest.mark.parametrize("n", [2, 3])
def test_g0_derivative_closed_form(n):
    rng = np.random.default_rng(10 + n)
    m = HalfSpaceModel(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    d = complex_derivative(lambda P: 2 * g0_eval(m, P).real + 0j, np.zeros(n))
    for c in range(2 * n):
        assert d[c] == pytest.approx(g0_wirtinger_derivative(m, c), abs=1e-8)


def test_g0_derivative_for_unit_normal():
    n = 3
    assert g0_wirtinger_derivative(model_en(n), n - 1) == pytest.approx(-(2 * n - 1))


@pytest.mark.parametrize("n", [2, 3])
def test_g0_is_harmonic(n):
    m = HalfSpaceModel(unit(n, n - 1) * (1 + 0.5j))
    w0 = np.array([0.1 - 0.05j] + [0.02j] * (n - 1))
    for part in (np.real, np.imag):
        _, _, d2, _ = wirtinger_derivatives(lambda P: part(g0_eval(m, P)), w0, 1e-2, 2)
        lap = 4 * np.trace(d2[:n, n:]).real
        assert abs(lap) < 1e-8
    # mean value over a small sphere, with antipodal pairs
    from robinmetric.domains import sphere_points

    u = sphere_points(4096, n, seed=0)
    r = 0.005
    vals = 0.5 * (g0_eval(m, w0 + r * u) + g0_eval(m, w0 - r * u))
    assert abs(vals.mean() - g0_eval(m, w0)) < 1e-7


def test_g_alpha_vanishes_for_tangential_alpha():
    m = model_en(2)
    w = np.array([[0.1, 0.2j], [0.3, -0.1]])
    assert np.all(g_alpha_eval(m, 0, w) == 0)


def test_g_alpha_derivative_example():
    assert g_alpha_w_derivative(model_en(2), 1, 1) == pytest.approx(3.0)


@pytest.mark.parametrize("n", [2, 3])
def test_g_alpha_derivative_matches_fd(n):
    rng = np.random.default_rng(20 + n)
    m = HalfSpaceModel(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for alpha in range(n):
        d = complex_derivative(lambda P: g_alpha_eval(m, alpha, P), np.zeros(n))
        for c in range(2 * n):
            assert d[c] == pytest.approx(g_alpha_w_derivative(m, alpha, c), abs=1e-8)


def test_g_alpha_is_combination_of_g0():
    """g_alpha(p0, w) = -(n-1) psi_alpha (g0 + conj g0) with psi_alpha = b_alpha."""
    n = 3
    rng = np.random.default_rng(5)
    m = HalfSpaceModel(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    w = 0.1 * (rng.standard_normal((6, n)) + 1j * rng.standard_normal((6, n)))
    for alpha in range(n):
        expected = -(n - 1) * m.b[alpha] * 2 * g0_eval(m, w).real
        assert np.allclose(g_alpha_eval(m, alpha, w), expected, rtol=1e-12)


def test_model_validation():
    with pytest.raises(ValueError):
        HalfSpaceModel(np.zeros(2))
    with pytest.raises(ValueError):
        HalfSpaceModel(np.ones(1))
