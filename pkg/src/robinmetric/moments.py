"""Hyperplane moment integrals over {Re zeta_n = 1/2}: exact values and Monte Carlo.

The boundary of the standard model half-space is parametrized by the
``2n - 1`` free coordinates ``u = (x_1, y_1, ..., x_{n-1}, y_{n-1}, y_n)``
with ``zeta_n = 1/2 + i y_n`` and ``|zeta|^2 = |u|^2 + 1/4``.  Every moment
is divided by ``sigma_2n = 2 pi^n / (n-1)!``, the area of the unit sphere in
``R^{2n}``.

Exact values are products of a rational number and a power of pi
(:class:`ExactValue`).  The Monte Carlo estimator samples a multivariate
Cauchy proposal with scale 1/2, whose density is proportional to
``(4 |zeta|^2)^(-n)``; the importance weights are then bounded for every
integrand in :data:`MOMENT_KINDS`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, gamma, pi

import numpy as np

from .wirtinger import combined


@dataclass(frozen=True)
class ExactValue:
    """``rational * pi**pi_power``."""

    rational: Fraction
    pi_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        if self.rational == 0:
            object.__setattr__(self, "pi_power", 0)

    def __mul__(self, other):
        if isinstance(other, ExactValue):
            return ExactValue(self.rational * other.rational, self.pi_power + other.pi_power)
        return ExactValue(self.rational * Fraction(other), self.pi_power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ExactValue):
            return ExactValue(self.rational / other.rational, self.pi_power - other.pi_power)
        return ExactValue(self.rational / Fraction(other), self.pi_power)

    def __add__(self, other):
        if not isinstance(other, ExactValue):
            other = ExactValue(Fraction(other))
        if self.rational == 0:
            return other
        if other.rational == 0:
            return self
        if self.pi_power != other.pi_power:
            raise ValueError("cannot add values with different powers of pi exactly")
        return ExactValue(self.rational + other.rational, self.pi_power)

    __radd__ = __add__

    def __neg__(self):
        return ExactValue(-self.rational, self.pi_power)

    def __sub__(self, other):
        return self + (-other if isinstance(other, ExactValue) else ExactValue(-Fraction(other)))

    def __float__(self):
        return float(self.rational) * pi**self.pi_power

    def __str__(self):
        if self.pi_power == 0:
            return str(self.rational)
        return f"{self.rational}*pi^{self.pi_power}"


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def radial_integral(a: int, b: int) -> ExactValue:
    """``I(a, b) = int_0^inf r^a (r^2 + 1/4)^(-b) dr`` for even ``a >= 0``, ``2b > a + 1``.

    Integration by parts lowers both exponents,
    ``I(a, b) = (a - 1) / (2 (b - 1)) I(a - 2, b - 1)``, down to
    ``I(0, m) = pi 2^(2m-2) (2m-3)!! / (2m-2)!!``.
    """
    if a % 2 or a < 0 or 2 * b <= a + 1:
        raise ValueError(f"I({a}, {b}) is not a convergent even moment")
    if a == 0:
        return ExactValue(Fraction(2 ** (2 * b - 2) * _double_factorial(2 * b - 3),
                                   _double_factorial(2 * b - 2)), 1)
    return Fraction(a - 1, 2 * (b - 1)) * radial_integral(a - 2, b - 1)


def sphere_area_ratio(n: int) -> ExactValue:
    """``sigma_{2n-1} / sigma_{2n} = 2^(n-1) (n-1)! / (pi (2n-3)!!)``."""
    return ExactValue(Fraction(2 ** (n - 1) * factorial(n - 1), _double_factorial(2 * n - 3)), -1)


def sphere_area(m: int) -> float:
    """Area of the unit sphere in ``R^m``."""
    return 2 * pi ** (m / 2) / gamma(m / 2)


class MomentKind(enum.Enum):
    ZETA_N_4N = "ZETA_N_4N"    # zeta_n |zeta|^(-4n)
    X_CONST = "X_CONST"        # |zeta|^(-4n)
    A_CONST = "A_CONST"        # x_1^2 |zeta|^(-4n-2)
    B_CONST = "B_CONST"        # |zeta|^(-4n-2)
    ABS_ZN_SQ = "ABS_ZN_SQ"    # |zeta_n|^2 |zeta|^(-4n-2)
    ZBAR_SQ = "ZBAR_SQ"        # conj(zeta_n)^2 |zeta|^(-4n-2)
    TANGENT_SQ = "TANGENT_SQ"  # |zeta_1|^2 |zeta|^(-4n-2)
    MIXED_ZERO = "MIXED_ZERO"  # zeta_1 zeta_n |zeta|^(-4n-2)

    @classmethod
    def parse(cls, tag) -> "MomentKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ValueError(f"unknown moment kind {tag!r}") from None


MOMENT_KINDS = tuple(MomentKind)


def moment_exact(kind, n: int) -> ExactValue:
    """Exact normalized moment for dimension ``n >= 2``."""
    kind = MomentKind.parse(kind)
    if n < 2:
        raise ValueError("n must be at least 2")
    ratio = sphere_area_ratio(n)
    X = ratio * radial_integral(2 * n - 2, 2 * n)
    B = ratio * radial_integral(2 * n - 2, 2 * n + 1)
    # x_1^2 averages |u|^2 / (2n - 1) over the 2n - 1 free coordinates
    A = ratio * radial_integral(2 * n, 2 * n + 1) / (2 * n - 1)
    quarter = Fraction(1, 4)
    table = {
        MomentKind.X_CONST: X,
        MomentKind.B_CONST: B,
        MomentKind.A_CONST: A,
        MomentKind.ZETA_N_4N: Fraction(1, 2) * X,
        MomentKind.ABS_ZN_SQ: quarter * B + A,
        MomentKind.ZBAR_SQ: quarter * B - A,
        MomentKind.TANGENT_SQ: 2 * A,
        MomentKind.MIXED_ZERO: ExactValue(Fraction(0)),
    }
    return table[kind]


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class QuadratureEstimate:
    value: complex
    stderr: float
    samples: int
    seed: int

    def z_score(self, exact: complex) -> float:
        err = abs(self.value - exact)
        if self.stderr == 0:
            return 0.0 if err == 0 else float("inf")
        return float(err / self.stderr)


def hyperplane_samples(n: int, samples: int, rng: np.random.Generator):
    """Points ``zeta`` on {Re zeta_n = 1/2} and their importance weights ``1/(sigma_2n q)``."""
    d = 2 * n - 1
    scale = 0.5
    u = scale * rng.standard_normal((samples, d)) / np.abs(rng.standard_normal((samples, 1)))
    r2 = np.einsum("ij,ij->i", u, u)
    # multivariate Cauchy density: Gamma(n) / (pi^n scale^d) (1 + r2/scale^2)^(-n)
    log_q = np.log(gamma(n)) - n * np.log(pi) - d * np.log(scale) - n * np.log1p(r2 / scale**2)
    zeta = np.empty((samples, n), dtype=complex)
    zeta[:, : n - 1] = u[:, 0 : 2 * n - 2 : 2] + 1j * u[:, 1 : 2 * n - 2 : 2]
    zeta[:, n - 1] = 0.5 + 1j * u[:, -1]
    weight = np.exp(-log_q) / sphere_area(2 * n)
    return zeta, weight


def _moment_integrand(kind: MomentKind, zeta: np.ndarray) -> np.ndarray:
    n = zeta.shape[1]
    r2 = np.einsum("ij,ij->i", zeta, zeta.conj()).real
    zn = zeta[:, -1]
    w4 = r2 ** (-2 * n)
    w42 = r2 ** (-2 * n - 1)
    return {
        MomentKind.ZETA_N_4N: zn * w4,
        MomentKind.X_CONST: w4 + 0j,
        MomentKind.A_CONST: zeta[:, 0].real ** 2 * w42 + 0j,
        MomentKind.B_CONST: w42 + 0j,
        MomentKind.ABS_ZN_SQ: np.abs(zn) ** 2 * w42 + 0j,
        MomentKind.ZBAR_SQ: zn.conj() ** 2 * w42,
        MomentKind.TANGENT_SQ: np.abs(zeta[:, 0]) ** 2 * w42 + 0j,
        MomentKind.MIXED_ZERO: zeta[:, 0] * zn * w42,
    }[kind]


def _estimate(vals: np.ndarray, samples: int, seed: int) -> QuadratureEstimate:
    mean = vals.mean()
    var = vals.real.var(ddof=1) + vals.imag.var(ddof=1)
    return QuadratureEstimate(complex(mean), float(np.sqrt(var / vals.size)), samples, seed)


def orbit_size(n: int) -> int:
    return 2 * 4 ** (n - 1)


def _orbit(zeta: np.ndarray) -> np.ndarray:
    """Images of each sample under zeta_j -> i^(k_j) zeta_j (j < n) and Im zeta_n -> -Im zeta_n.

    The hyperplane and the proposal density are invariant under these maps,
    so averaging over the orbit keeps the estimator unbiased while removing
    every integrand term that is odd under one of them.
    """
    n = zeta.shape[1]
    out = []
    for flip in (False, True):
        base = zeta.copy()
        if flip:
            base[:, -1] = base[:, -1].conj()
        for ks in itertools.product(range(4), repeat=n - 1):
            img = base.copy()
            img[:, :-1] *= 1j ** np.array(ks)
            out.append(img)
    return np.stack(out)  # (orbit_size(n), m, n)


def hyperplane_mc(integrand, n: int, samples: int, seed: int, chunk: int = 250_000,
                  symmetrize: bool = False) -> QuadratureEstimate:
    """Normalized integral ``(1/sigma_2n) int integrand(zeta) dS`` over {Re zeta_n = 1/2}.

    With ``symmetrize`` each proposal draw is expanded to its orbit of
    :func:`orbit_size` symmetric images; at least ``samples`` integrand
    evaluations are made (rounded up to whole orbits) and the standard error
    is taken over the orbit means.
    """
    samples = int(samples)
    group = orbit_size(n) if symmetrize else 1
    draws = -(-samples // group)
    if draws < 2:
        raise ValueError("need at least two independent draws")
    rng = np.random.default_rng(seed)
    parts = []
    step = max(chunk // group, 1)
    for start in range(0, draws, step):
        zeta, wt = hyperplane_samples(n, min(step, draws - start), rng)
        if symmetrize:
            imgs = _orbit(zeta)
            vals = np.asarray(integrand(imgs.reshape(-1, n)), dtype=complex).reshape(group, -1)
            parts.append(vals.mean(axis=0) * wt)
        else:
            parts.append(np.asarray(integrand(zeta), dtype=complex) * wt)
    return _estimate(np.concatenate(parts), draws * group, seed)


def moment_mc(kind, n: int, samples: int, seed: int) -> QuadratureEstimate:
    """Importance-sampled Monte Carlo estimate of :func:`moment_exact`."""
    kind = MomentKind.parse(kind)
    if samples < 1000:
        raise ValueError("moment_mc needs at least 10^3 samples")
    return hyperplane_mc(lambda z: _moment_integrand(kind, z), n, samples, seed)


# ---------------------------------------------------------------------------
# quadratures for derivatives of the model Green function at the origin


def _check_hess(hess, n: int) -> np.ndarray:
    H = np.asarray(hess, dtype=complex)
    if H.shape != (2 * n, 2 * n):
        raise ValueError(f"expected a combined-index Hessian of shape {(2 * n, 2 * n)}")
    return H


def green_gradient_norm_on_boundary(zeta: np.ndarray) -> np.ndarray:
    """``|d_zeta g(0, zeta)|`` for the model Green function with pole 0, from its gradient.

    ``dg/dzeta_j = -(n-1)(conj(zeta_j)|zeta|^(-2n) - (conj(zeta_j) - conj(0*_j))|zeta - 0*|^(-2n))``
    with ``0* = e_n``.
    """
    n = zeta.shape[1]
    o = np.zeros(n)
    o[-1] = 1.0
    r = np.linalg.norm(zeta, axis=1)[:, None]
    rs = np.linalg.norm(zeta - o, axis=1)[:, None]
    grad = -(n - 1) * (zeta.conj() * r ** (-2 * n) - (zeta.conj() - o) * rs ** (-2 * n))
    return np.linalg.norm(grad, axis=1)


def lambda_a_quadrature(hess, n: int, a: int, samples: int = 1_000_000, seed: int = 0) -> QuadratureEstimate:
    """Monte Carlo value of ``lambda_a(0) = -(1/((n-1) sigma_2n)) int k1 |d_zeta g|^2 dS``.

    ``hess`` is the combined-index second-derivative matrix of a
    normalized defining function at its boundary point 0, and
    ``k1(zeta) = sum_b Z_b psi_{ab}(0)`` with ``Z = (zeta, conj zeta)``.
    """
    H = _check_hess(hess, n)
    if a in (n - 1, 2 * n - 1) or not 0 <= a < 2 * n:
        raise ValueError("index a must be tangential (not n or n-bar)")

    def integrand(zeta):
        kern = combined(zeta) @ H[a]
        return -kern * green_gradient_norm_on_boundary(zeta) ** 2 / (n - 1)

    return hyperplane_mc(integrand, n, samples, seed)


def lambda_a_closed_form(hess, n: int, a: int) -> complex:
    """``-(n-1)(psi_{an}(0) + psi_{a nbar}(0))``."""
    H = _check_hess(hess, n)
    return complex(-(n - 1) * (H[a, n - 1] + H[a, 2 * n - 1]))


NORMAL_FACTORS = {"verbatim": 1.0, "corrected": 2.0}


def mixed_second_derivative_quadrature(hess, n: int, c: int, beta: int, samples: int = 1_000_000,
                                       seed: int = 0, normal_factor: str = "verbatim") -> QuadratureEstimate:
    """Monte Carlo value of ``d^2 g / dw_c dconj(p_beta)`` at ``(0, 0)`` on the model half-space.

    Differentiates, at ``w = 0``, the representation
    ``dg/dconj(p_beta)(0, w) = -(n-1)(1 - kappa Re w_n)/sigma_2n
    int conj(k1_beta)(zeta) |zeta|^(-2n) |zeta - w|^(-2n) dS``.
    ``normal_factor="verbatim"`` uses ``kappa = 1``; ``"corrected"`` uses
    ``kappa = 2``, the value produced by differentiating the reflected
    Green function in the normal direction.
    """
    H = _check_hess(hess, n)
    if not 0 <= c < 2 * n:
        raise ValueError("c must be a combined index")
    if not 0 <= beta < n - 1:
        raise ValueError("beta must be a holomorphic index different from n")
    kappa = NORMAL_FACTORS[normal_factor]
    bb = beta + n  # conj(beta) in combined form
    # d Re w_n / d w_c
    dre = 0.5 if c in (n - 1, 2 * n - 1) else 0.0

    def integrand(zeta):
        Z = combined(zeta)
        kern = Z @ H[bb]  # conj(k1_beta) = sum_b Z_b psi_{bbar b}
        r2 = np.einsum("ij,ij->i", zeta, zeta.conj()).real
        # d/dw_c |zeta - w|^(-2n) at w = 0 is n |zeta|^(-2n-2) conj(Z_c)
        zc = Z[:, c].conj()
        body = n * r2 ** (-2 * n - 1) * zc - kappa * dre * r2 ** (-2 * n)
        return -(n - 1) * kern * body

    return hyperplane_mc(integrand, n, samples, seed)


def mixed_second_derivative_closed_form(hess, n: int, c: int, beta: int, constants: str = "original") -> complex:
    """Case I / Case II constants for ``d^2 g / dw_c dconj(p_beta)(0, 0)``.

    ``constants="original"`` gives ``-(n-1){(n+1/2) psi_{bbar c} + (n-1/2) psi_{bbar cbar}}``
    in the normal case; ``"corrected"`` gives ``-(n-1){n psi_{bbar c} + (n-1) psi_{bbar cbar}}``.
    The tangential case is ``-(n-1) psi_{bbar c}`` in both.
    """
    H = _check_hess(hess, n)
    bb = beta + n
    cc = c + n if c < n else c - n
    if c not in (n - 1, 2 * n - 1):
        return complex(-(n - 1) * H[bb, c])
    if constants == "original":
        return complex(-(n - 1) * ((n + 0.5) * H[bb, c] + (n - 0.5) * H[bb, cc]))
    if constants == "corrected":
        return complex(-(n - 1) * (n * H[bb, c] + (n - 1) * H[bb, cc]))
    raise ValueError(f"unknown constants {constants!r}")
