"""Closed-form potential theory on the model half-space {2 Re<b, w> - 1 < 0}.

Green functions use the singularity ``|z - p|^(2 - 2n)`` with coefficient
one, so the Robin function is the constant term of ``G - |z - p|^(2 - 2n)``
at the pole.  ``<b, w>`` is the bilinear pairing ``sum_j b_j w_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import DomainSpec
from .wirtinger import combined


@dataclass(frozen=True)
class HalfSpaceModel:
    """Half-space {w : 2 Re <b, w> < 1}; the origin is always interior."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=complex)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("b must be a complex vector with n >= 2 entries")
        if np.linalg.norm(b) == 0:
            raise ValueError("half-space normal b must be nonzero")
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.size

    @property
    def exponent(self) -> int:
        """``2n - 2``, the order of the fundamental singularity."""
        return 2 * self.n - 2

    def level(self, w) -> np.ndarray:
        """``2 Re <b, w> - 1``; negative inside."""
        return 2.0 * np.real(np.asarray(w, complex) @ self.b) - 1.0

    @property
    def origin_image(self) -> np.ndarray:
        """The reflection of the origin, ``conj(b) / |b|^2``."""
        return self.b.conj() / np.vdot(self.b, self.b).real


def symmetric_point(model: HalfSpaceModel, p) -> np.ndarray:
    """Mirror image of ``p`` across the boundary hyperplane."""
    p = np.asarray(p, dtype=complex)
    bb = np.vdot(model.b, model.b).real
    return p - (model.level(p) / bb)[..., None] * model.b.conj()


def halfspace_green(model: HalfSpaceModel, p, z) -> np.ndarray:
    """``|z - p|^(2-2n) - |z - p*|^(2-2n)``."""
    p = np.asarray(p, dtype=complex)
    z = np.asarray(z, dtype=complex)
    d = np.linalg.norm(z - p, axis=-1)
    if np.any(d == 0):
        raise ValueError("Green function evaluated at its pole")
    m = model.exponent
    ps = symmetric_point(model, p)
    return d ** (-m) - np.linalg.norm(z - ps, axis=-1) ** (-m)


def halfspace_robin(model: HalfSpaceModel, p) -> np.ndarray:
    """``-|b|^(2n-2) (2 Re <b, p> - 1)^(2-2n)``."""
    v = model.level(p)
    if np.any(v >= 0):
        raise ValueError("Robin function of the half-space needs an interior point")
    m = model.exponent
    return -np.linalg.norm(model.b) ** m * v ** (-m)


# ---------------------------------------------------------------------------
# variation kernels

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_T = 0.5 * (_GL_NODES + 1.0)
_WT = 0.5 * _GL_WEIGHTS


def _segment(spec: DomainSpec, p, w):
    p = np.asarray(p, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return p, w, float(spec.psi(p))


def variation_kernel_f(spec: DomainSpec, p, w) -> float:
    """``f(p, w) = int_0^1 sum_b W_b psi_b(p - psi(p) t w) dt - 1``, W = (w, conj w).

    A defining function of the rescaled domain D(p); at boundary points
    ``p`` it reduces to the tangent half-space.
    """
    p, w, s = _segment(spec, p, w)
    W = combined(w)
    acc = 0.0
    for t, wt in zip(_T, _WT):
        d1 = spec.eval(p - s * t * w, 1).d1
        acc += wt * np.real(W @ d1)
    return float(acc - 1.0)


def variation_kernel_grad(spec: DomainSpec, p, w):
    """``(df/dp_a for all combined a, df/dw_j for j < n)`` by Gauss-Legendre quadrature."""
    p, w, s = _segment(spec, p, w)
    n = p.size
    W = combined(w)
    g_p = spec.eval(p, 1).d1
    dp = np.zeros(2 * n, dtype=complex)
    dw = np.zeros(n, dtype=complex)
    eye = np.eye(2 * n)
    for t, wt in zip(_T, _WT):
        ev = spec.eval(p - s * t * w, 2)
        # dZ_c / dp_a = delta_ca - psi_a(p) t W_c
        J = eye - t * np.outer(g_p, W)
        dp += wt * (J @ (ev.d2 @ W))
        dw += wt * (ev.d1[:n] - s * t * (ev.d2[:n] @ W))
    return dp, dw


def k1(spec: DomainSpec, p, zeta, a: int) -> complex:
    """``(df/dp_a)(p, zeta) / |d_zeta f(p, zeta)|`` for combined index ``a``."""
    dp, dw = variation_kernel_grad(spec, p, zeta)
    return complex(dp[a] / np.linalg.norm(dw))


# ---------------------------------------------------------------------------
# harmonic auxiliaries


def g0_eval(model: HalfSpaceModel, w) -> np.ndarray:
    """``|w - 0*|^(-2n) (sum_i 0*_i conj(w_i) - |0*|^2)``, with 0* the image of the origin."""
    w = np.asarray(w, dtype=complex)
    o = model.origin_image
    r = np.linalg.norm(w - o, axis=-1)
    if np.any(r == 0):
        raise ValueError("g0 is singular at the reflected origin")
    return r ** (-2 * model.n) * (w.conj() @ o - np.vdot(o, o).real)


def g0_wirtinger_derivative(model: HalfSpaceModel, c: int) -> complex:
    """Closed form of ``d/dw_c (g0 + conj g0)`` at ``w = 0``: ``-(2n-1) b_c |b|^(2n-2)``."""
    n = model.n
    bc = combined(model.b)[c]
    return complex(-(2 * n - 1) * bc * np.linalg.norm(model.b) ** (2 * n - 2))


def g_alpha_eval(model: HalfSpaceModel, alpha: int, w) -> np.ndarray:
    """``(n-1) b_alpha |w - 0*|^(-2n) (2|0*|^2 - 2 Re sum conj(0*_i) w_i)``; ``alpha`` in ``range(n)``."""
    n = model.n
    if not 0 <= alpha < n:
        raise ValueError("alpha must be a holomorphic index")
    w = np.asarray(w, dtype=complex)
    o = model.origin_image
    r = np.linalg.norm(w - o, axis=-1)
    brace = 2 * np.vdot(o, o).real - 2 * np.real(w @ o.conj())
    return (n - 1) * model.b[alpha] * r ** (-2 * n) * brace


def g_alpha_w_derivative(model: HalfSpaceModel, alpha: int, c: int) -> complex:
    """``d g_alpha / d w_c`` at ``w = 0``: ``(n-1)(2n-1) b_alpha b_c |b|^(2n-2)``."""
    n = model.n
    bc = combined(model.b)[c]
    return complex((n - 1) * (2 * n - 1) * model.b[alpha] * bc * np.linalg.norm(model.b) ** (2 * n - 2))
