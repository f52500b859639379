from fractions import Fraction

import numpy as np
import pytest

from robinmetric.domains import custom_polynomial
from robinmetric.moments import (MOMENT_KINDS, ExactValue, MomentKind, hyperplane_mc,
                                 lambda_a_closed_form, lambda_a_quadrature,
                                 mixed_second_derivative_closed_form,
                                 mixed_second_derivative_quadrature, moment_exact, moment_mc,
                                 orbit_size, radial_integral, sphere_area, sphere_area_ratio)

Z = (0, 0)


def hessian(terms, n=2):
    """Combined second-derivative matrix at 0 of 2 Re w_n + the given real polynomial terms."""
    zero = (0,) * n
    en = tuple(1 if i == n - 1 else 0 for i in range(n))
    spec = custom_polynomial(n, [(1.0, en, zero), (1.0, zero, en)] + list(terms))
    return spec.eval(np.zeros(n), 2).d2


def re_term(c, a, b):
    """2 Re(c z^a conj(z)^b) as a pair of monomials."""
    return [(c, a, b), (np.conj(c), b, a)]


# --- exact values -----------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_form_moments(n):
    ex = {k: moment_exact(k, n) for k in MOMENT_KINDS}
    assert all(v.pi_power == 0 for v in ex.values())
    assert ex[MomentKind.X_CONST].rational == 2
    assert ex[MomentKind.A_CONST].rational == Fraction(1, 2 * n)
    assert ex[MomentKind.B_CONST].rational == Fraction(2 * (2 * n + 1), n)
    assert ex[MomentKind.ZETA_N_4N].rational == 1
    assert ex[MomentKind.ABS_ZN_SQ].rational == Fraction(n + 1, n)
    assert ex[MomentKind.ZBAR_SQ].rational == 1
    assert ex[MomentKind.MIXED_ZERO].rational == 0


def test_moment_examples_n2():
    assert float(moment_exact("A_CONST", 2)) == 0.25
    assert float(moment_exact("B_CONST", 2)) == 5.0
    assert float(moment_exact("ABS_ZN_SQ", 2)) == 1.5


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_moment_web(n):
    """Linear relations between the moments from the split |zeta_n|^2 = 1/4 + y_n^2."""
    X, A, B = (moment_exact(k, n) for k in ("X_CONST", "A_CONST", "B_CONST"))
    assert moment_exact("ZETA_N_4N", n) == Fraction(1, 2) * X
    assert moment_exact("ABS_ZN_SQ", n) == Fraction(1, 4) * B + A
    assert moment_exact("ZBAR_SQ", n) == Fraction(1, 4) * B - A
    assert moment_exact("TANGENT_SQ", n) == 2 * A
    assert A == X / (4 * n)


@pytest.mark.parametrize("m", [2, 3, 4, 6, 8])
def test_sphere_area(m):
    # R^2: 2 pi, R^3: 4 pi, R^4: 2 pi^2, R^6: pi^3, R^8: pi^4 / 3
    expected = {2: 2 * np.pi, 3: 4 * np.pi, 4: 2 * np.pi**2, 6: np.pi**3, 8: np.pi**4 / 3}[m]
    assert sphere_area(m) == pytest.approx(expected, rel=1e-14)


def test_radial_integral_against_quadrature():
    from scipy.integrate import quad

    for a, b in [(2, 4), (4, 5), (6, 7)]:
        ex = radial_integral(a, b)
        num, _ = quad(lambda r: r**a * (r * r + 0.25) ** (-b), 0, np.inf)
        assert float(ex) == pytest.approx(num, rel=1e-10)


def test_sphere_ratio_is_pi_free():
    for n in (2, 3, 4):
        ratio = sphere_area_ratio(n)
        assert float(ratio) == pytest.approx(sphere_area(2 * n - 1) / sphere_area(2 * n), rel=1e-14)


def test_exact_value_arithmetic():
    a = ExactValue(Fraction(1, 3), 1)
    assert (a * 3).rational == 1 and (a * 3).pi_power == 1
    assert (a / a) == ExactValue(Fraction(1), 0)
    assert a + ExactValue(0) == a
    with pytest.raises(ValueError):
        a + ExactValue(Fraction(1), 0)
    assert float(a) == pytest.approx(np.pi / 3)


def test_unknown_kind():
    with pytest.raises(ValueError):
        moment_exact("NOPE", 2)
    with pytest.raises(ValueError):
        moment_exact("X_CONST", 1)


# --- Monte Carlo ---------------------------------------------------------------------

def test_mc_x_const_n2():
    est = moment_mc("X_CONST", 2, 10**6, seed=0)
    assert abs(est.value - 2.0) < 0.01
    assert est.z_score(2.0) < 4


def test_mc_mixed_zero():
    est = moment_mc("MIXED_ZERO", 3, 200_000, seed=1)
    assert est.z_score(0.0) < 4


def test_mc_a_const_n3():
    est = moment_mc("A_CONST", 3, 200_000, seed=2)
    assert est.z_score(1 / 6) < 3


def test_mc_is_deterministic():
    a = moment_mc("B_CONST", 2, 20_000, seed=5)
    b = moment_mc("B_CONST", 2, 20_000, seed=5)
    assert a == b
    assert moment_mc("B_CONST", 2, 20_000, seed=6).value != a.value


def test_mc_requires_samples():
    with pytest.raises(ValueError):
        moment_mc("X_CONST", 2, 10, seed=0)


def test_symmetrized_estimator_is_unbiased():
    n = 2
    est = hyperplane_mc(lambda z: np.abs(z[:, 0]) ** 2 * np.sum(np.abs(z) ** 2, 1) ** (-2 * n - 1),
                        n, 80_000, seed=3, symmetrize=True)
    assert est.samples % orbit_size(n) == 0
    assert est.z_score(float(moment_exact("TANGENT_SQ", n))) < 4
    odd = hyperplane_mc(lambda z: z[:, 0] * np.sum(np.abs(z) ** 2, 1) ** (-2 * n), n, 8_000, seed=3,
                        symmetrize=True)
    assert abs(odd.value) < 1e-15


# --- lambda_a quadrature ------------------------------------------------------------

def test_lambda_a_closed_form_example():
    H = hessian(re_term(0.3, (1, 1), Z) + re_term(0.1, (1, 0), (0, 1)))
    assert H[0, 1] == pytest.approx(0.3) and H[0, 3] == pytest.approx(0.1)
    assert lambda_a_closed_form(H, 2, 0) == pytest.approx(-0.4)
    est = lambda_a_quadrature(H, 2, 0, samples=200_000, seed=0)
    assert est.z_score(-0.4) < 4


def test_lambda_a_zero_kernel():
    H = hessian([])
    assert lambda_a_closed_form(H, 2, 0) == 0
    assert lambda_a_quadrature(H, 2, 0, samples=10_000, seed=0).value == 0


def test_lambda_a_example_n3():
    H = hessian(re_term(1.0, (1, 0, 1), (0, 0, 0)), n=3)
    assert lambda_a_closed_form(H, 3, 0) == pytest.approx(-2.0)
    est = lambda_a_quadrature(H, 3, 0, samples=200_000, seed=1)
    assert est.z_score(-2.0) < 4


def test_lambda_a_rejects_normal_index():
    H = hessian([])
    for a in (1, 3):
        with pytest.raises(ValueError):
            lambda_a_quadrature(H, 2, a, samples=1000)


# --- mixed second derivative -----------------------------------------------------------

def test_mixed_tangential_case():
    H = hessian([(1.0, (1, 0), (1, 0))])
    assert mixed_second_derivative_closed_form(H, 2, 0, 0) == pytest.approx(-1.0)
    est = mixed_second_derivative_quadrature(H, 2, 0, 0, samples=200_000, seed=0)
    assert est.z_score(-1.0) < 4


def test_mixed_normal_case_constants():
    H = hessian(re_term(1.0, (0, 1), (1, 0)))
    assert H[2, 1] == pytest.approx(1.0) and H[2, 3] == 0
    assert mixed_second_derivative_closed_form(H, 2, 1, 0) == pytest.approx(-2.5)
    assert mixed_second_derivative_closed_form(H, 2, 1, 0, "corrected") == pytest.approx(-2.0)
    verbatim = mixed_second_derivative_quadrature(H, 2, 1, 0, samples=400_000, seed=1)
    assert verbatim.z_score(-2.5) < 4
    corrected = mixed_second_derivative_quadrature(H, 2, 1, 0, samples=400_000, seed=1,
                                                   normal_factor="corrected")
    assert corrected.z_score(-2.0) < 4
    assert verbatim.z_score(-2.0) > 10 and corrected.z_score(-2.5) > 10


def test_mixed_all_zero():
    H = np.zeros((4, 4), complex)
    for c in range(4):
        assert mixed_second_derivative_closed_form(H, 2, c, 0) == 0
    assert mixed_second_derivative_quadrature(H, 2, 1, 0, samples=10_000).value == 0


def test_mixed_index_checks():
    H = hessian([])
    with pytest.raises(ValueError):
        mixed_second_derivative_quadrature(H, 2, 0, 1, samples=1000)
    with pytest.raises(ValueError):
        mixed_second_derivative_closed_form(H, 2, 1, 0, "other")
