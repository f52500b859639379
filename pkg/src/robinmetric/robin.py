"""Robin function backends: closed-form ball, closed-form half-space, and MFS.

The Robin function of a bounded domain is ``Lambda(p) = -h_p(p)`` where
``h_p`` is harmonic in the domain with boundary values ``|zeta - p|^(2-2n)``.
The method of fundamental solutions (MFS) expands ``h_p`` in point
sources ``|z - q_j|^(2-2n)`` placed outside the closure and fits the
boundary data by least squares; one QR factorization serves every pole.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .domains import (AffineSpec, DomainError, DomainSpec, PolynomialSpec, ProjectionError,
                      boundary_project, radial_boundary, sphere_points)
from .fd import FDPolicy, wirtinger_derivatives
from .wirtinger import combined, to_real

log = logging.getLogger(__name__)


class RobinError(RuntimeError):
    """Raised when a backend cannot evaluate the Robin function at a point."""


@dataclass(frozen=True)
class RobinEval:
    """Robin function and combined-index Wirtinger derivatives at ``point``."""

    point: np.ndarray
    lambda_big: float
    d1: np.ndarray | None
    d2: np.ndarray | None
    d3: np.ndarray | None
    psi: float
    backend: str
    low_confidence: bool = False
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.point.size

    @property
    def lambda_small(self) -> float:
        """Normalized Robin function ``Lambda psi^(2n-2)``."""
        return self.lambda_big * self.psi ** (2 * self.n - 2)

    @property
    def mixed_hessian(self) -> np.ndarray:
        """``Lambda_{a bbar}`` as an n x n matrix."""
        n = self.n
        return self.d2[:n, n:]

    def to_dict(self) -> dict:
        def cplx(a):
            if a is None:
                return None
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "point": cplx(self.point),
            "lambda_big": self.lambda_big,
            "lambda_small": self.lambda_small,
            "psi": self.psi,
            "d1": cplx(self.d1),
            "d2": cplx(self.d2),
            "d3": cplx(self.d3),
            "backend": self.backend,
            "low_confidence": self.low_confidence,
            "residual": self.residual,
        }


# ---------------------------------------------------------------------------
# closed forms:  Lambda = -K u^(-m) for a real quadratic u > 0 inside


def _power_law(K: float, m: int, u: float, ua: np.ndarray, uab: np.ndarray, order: int):
    """Derivatives of ``F(u) = -K u^(-m)`` composed with a quadratic ``u``."""
    F0 = -K * u ** (-m)
    F1 = m * K * u ** (-m - 1)
    F2 = -m * (m + 1) * K * u ** (-m - 2)
    F3 = m * (m + 1) * (m + 2) * K * u ** (-m - 3)
    d1 = F1 * ua if order >= 1 else None
    d2 = F2 * np.outer(ua, ua) + F1 * uab if order >= 2 else None
    d3 = None
    if order >= 3:
        cross = np.einsum("ab,c->abc", uab, ua)
        d3 = (F3 * np.einsum("a,b,c->abc", ua, ua, ua)
              + F2 * (cross + cross.transpose(0, 2, 1) + cross.transpose(2, 1, 0)))
    return F0, d1, d2, d3


class RobinBackend:
    name = "abstract"
    closed_form = False

    def value(self, P: np.ndarray) -> np.ndarray:
        """Vectorized Lambda at points of shape ``(k, n)``."""
        raise NotImplementedError

    def distance(self, p) -> float:
        """Euclidean distance from ``p`` to the boundary."""
        raise NotImplementedError

    def analytic(self, p, order: int):
        raise NotImplementedError


class BallRobin(RobinBackend):
    """``Lambda(p) = -r^(2n-2) (r^2 - |p - c|^2)^(2-2n)`` (Kelvin reflection)."""

    name = "ball"
    closed_form = True

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=complex)
        self.radius = float(radius)
        self.n = self.center.size
        self.m = 2 * self.n - 2

    @classmethod
    def from_spec(cls, spec: DomainSpec) -> "BallRobin":
        geo = ball_geometry(spec)
        if geo is None:
            raise DomainError(f"domain of kind {spec.kind!r} is not a ball")
        return cls(*geo)

    def _u(self, P):
        d = np.asarray(P, complex) - self.center
        return self.radius**2 - np.einsum("...i,...i->...", d, d.conj()).real

    def value(self, P):
        u = self._u(P)
        if np.any(u <= 0):
            raise RobinError("point outside the ball")
        return -(self.radius**self.m) * u ** (-self.m)

    def distance(self, p):
        return float(self.radius - np.linalg.norm(np.asarray(p, complex) - self.center))

    def analytic(self, p, order):
        p = np.asarray(p, dtype=complex)
        u = float(self._u(p))
        if u <= 0:
            raise RobinError("point outside the ball")
        n = self.n
        d = p - self.center
        ua = -combined(d).conj()  # du/dz_j = -conj(d_j), du/dconj(z_j) = -d_j
        uab = np.zeros((2 * n, 2 * n))
        uab[:n, n:] = -np.eye(n)
        uab[n:, :n] = -np.eye(n)
        return _power_law(self.radius**self.m, self.m, u, ua, uab, order)


class HalfSpaceRobin(RobinBackend):
    """``Lambda(p) = -|b|^(2n-2) (1 - 2 Re <b, p>)^(2-2n)``."""

    name = "halfspace"
    closed_form = True

    def __init__(self, b):
        self.b = np.asarray(b, dtype=complex)
        self.n = self.b.size
        self.m = 2 * self.n - 2

    @classmethod
    def from_spec(cls, spec: DomainSpec) -> "HalfSpaceRobin":
        b = halfspace_geometry(spec)
        if b is None:
            raise DomainError(f"domain of kind {spec.kind!r} is not a half-space")
        return cls(b)

    def _u(self, P):
        return 1.0 - 2.0 * np.real(np.asarray(P, complex) @ self.b)

    def value(self, P):
        u = self._u(P)
        if np.any(u <= 0):
            raise RobinError("point outside the half-space")
        return -np.linalg.norm(self.b) ** self.m * u ** (-self.m)

    def distance(self, p):
        return float(self._u(p) / (2 * np.linalg.norm(self.b)))

    def analytic(self, p, order):
        u = float(self._u(p))
        if u <= 0:
            raise RobinError("point outside the half-space")
        n = self.n
        ua = -combined(self.b)
        uab = np.zeros((2 * n, 2 * n))
        return _power_law(np.linalg.norm(self.b) ** self.m, self.m, u, ua, uab, order)


def ball_geometry(spec: DomainSpec):
    """``(center, radius)`` when the domain is a Euclidean ball, else ``None``."""
    if isinstance(spec, PolynomialSpec):
        if spec.kind == "ball":
            return np.zeros(spec.n, complex), spec.params["radius"]
        if spec.kind == "ellipsoid" and np.ptp(spec.params["weights"]) == 0:
            return np.zeros(spec.n, complex), 1.0 / np.sqrt(spec.params["weights"][0])
        return None
    if isinstance(spec, AffineSpec):
        base = ball_geometry(spec.base)
        if base is None:
            return None
        AhA = spec.A.conj().T @ spec.A
        t2 = AhA[0, 0].real
        if not np.allclose(AhA, t2 * np.eye(spec.n), rtol=0, atol=1e-13 * t2):
            return None
        c, r = base
        return spec.from_base(c[None, :])[0], r / np.sqrt(t2)
    return None


def halfspace_geometry(spec: DomainSpec):
    """Normal ``b`` with domain {2 Re <b, w> < 1}, or ``None``."""
    if isinstance(spec, PolynomialSpec):
        return np.asarray(spec.params["b"], complex) if spec.kind == "halfspace" else None
    if isinstance(spec, AffineSpec):
        b = halfspace_geometry(spec.base)
        if b is None:
            return None
        rhs = 1.0 - 2.0 * np.real(spec.shift @ b)
        if rhs <= 0:
            return None
        return spec.A.T @ b / rhs
    return None


# ---------------------------------------------------------------------------
# method of fundamental solutions


def _kernel(X: np.ndarray, Y: np.ndarray, m: int) -> np.ndarray:
    """``|X_i - Y_j|^(-m)`` for real point arrays."""
    d2 = (np.einsum("ij,ij->i", X, X)[:, None] + np.einsum("ij,ij->i", Y, Y)[None, :]
          - 2.0 * X @ Y.T)
    return np.maximum(d2, 0.0) ** (-m / 2)


@dataclass
class MfsModel:
    """Collocation/charge layout and the QR factors of the MFS matrix."""

    n: int
    collocation: np.ndarray  # real coordinates, (M, 2n)
    charges: np.ndarray      # real coordinates, (N, 2n)
    checks: np.ndarray       # boundary check points, (K, 2n)
    Q: np.ndarray
    R: np.ndarray
    inflation: float
    seed: int
    focus: np.ndarray | None = None
    condition: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return 2 * self.n - 2

    def coefficients(self, P: np.ndarray) -> np.ndarray:
        """Charge strengths for the poles ``P`` (real coordinates, ``(k, 2n)``)."""
        B = _kernel(self.collocation, P, self.m)
        return sla.solve_triangular(self.R, self.Q.T @ B, check_finite=False)

    def harmonic_part(self, Z: np.ndarray, P: np.ndarray, C: np.ndarray | None = None) -> np.ndarray:
        """``h_p(z)`` for matched rows of ``Z`` and ``P``."""
        if C is None:
            C = self.coefficients(P)
        return np.einsum("kj,jk->k", _kernel(Z, self.charges, self.m), C)

    def boundary_residual(self, P: np.ndarray) -> np.ndarray:
        """Max relative misfit of the boundary data at the check points, per pole."""
        C = self.coefficients(P)
        approx = _kernel(self.checks, self.charges, self.m) @ C
        exact = _kernel(self.checks, P, self.m)
        return np.max(np.abs(approx - exact), axis=0) / np.max(np.abs(exact), axis=0)


def _cluster_directions(count: int, focus: np.ndarray, depth: float, seed: int,
                        widest: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors whose angles to ``focus`` are log-uniform in ``[0.05 depth, widest]``."""
    rng = np.random.default_rng(seed)
    d = focus.size
    xi = rng.standard_normal((count, d))
    xi -= (xi @ focus)[:, None] * focus
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    u = (np.arange(count) + rng.random(count)) / count
    lo = 0.05 * depth
    ang = lo * np.exp(u * np.log(widest / lo))
    return np.cos(ang)[:, None] * focus + np.sin(ang)[:, None] * xi, ang


def mfs_build(spec: DomainSpec, M: int = 4000, N: int = 2500, inflation: float = 2.0,
              seed: int = 0, focus=None, focus_depth: float | None = None,
              smooth_steps: int = 3, checks: int = 400) -> MfsModel:
    """Lay out collocation and charge points and factor the MFS matrix.

    Without ``focus`` both sets are quasi-uniform: collocation points are
    boundary hits of Sobol rays from the center and charges sit at
    ``center + inflation * (boundary point - center)``.  With a boundary
    point ``focus`` and depth ``focus_depth``, 5/8 of the collocation points
    and 65% of the charges cluster around the focus (graded mesh) so that
    poles at that depth are resolved.
    """
    if not spec.bounded:
        raise DomainError("MFS needs a bounded domain")
    if inflation <= 1.0:
        raise DomainError("inflation must exceed 1: charges would lie on or inside the boundary")
    if N > M:
        raise DomainError("need at least as many collocation points as charges")
    n = spec.n
    c = spec.center()
    cr = to_real(c)
    if focus is None:
        colloc = radial_boundary(spec, sphere_points(M, n, seed, smooth_steps))
        shell = radial_boundary(spec, sphere_points(N, n, seed + 1, smooth_steps))
        charges = to_real(c + inflation * (shell - c))
        fvec = None
    else:
        if focus_depth is None or focus_depth <= 0:
            raise DomainError("focused layout needs a positive focus_depth")
        fvec = to_real(np.asarray(focus, complex) - c)
        radius = np.linalg.norm(fvec)
        fvec = fvec / radius
        d0 = focus_depth / radius
        Mc = int(round(0.625 * M))
        Nc = int(round(0.65 * N))
        dirs_c, _ = _cluster_directions(Mc, fvec, d0, seed + 11)
        colloc = radial_boundary(spec, np.vstack([
            sphere_points(M - Mc, n, seed, smooth_steps),
            dirs_c[:, :n] + 1j * dirs_c[:, n:],
        ]))
        shell_u = radial_boundary(spec, sphere_points(N - Nc, n, seed + 1, smooth_steps))
        dirs_q, ang = _cluster_directions(Nc, fvec, d0, seed + 12)
        shell_c = radial_boundary(spec, dirs_q[:, :n] + 1j * dirs_q[:, n:])
        tau = np.minimum(1.0 * (ang + d0), inflation - 1.0)
        charges = to_real(np.vstack([c + inflation * (shell_u - c),
                                     c + (1.0 + tau)[:, None] * (shell_c - c)]))
    Xc = to_real(colloc)
    if np.any(spec.psi(charges[:, :n] + 1j * charges[:, n:]) <= 0):
        raise DomainError("a charge point landed inside the closed domain")
    chk = to_real(radial_boundary(spec, sphere_points(checks, n, seed + 7)))
    A = _kernel(Xc, charges, 2 * n - 2)
    Q, R = sla.qr(A, mode="economic", check_finite=False)
    diag = np.abs(np.diag(R))
    cond = float(diag.max() / diag.min()) if diag.min() > 0 else float("inf")
    if not np.isfinite(cond) or diag.min() < 1e-15 * diag.max():
        raise DomainError(f"MFS matrix is numerically rank deficient (R-diagonal ratio {cond:.3e})")
    model = MfsModel(n, Xc, charges, chk, Q, R, inflation, seed, fvec, cond)
    model.diagnostics["center_residual"] = float(model.boundary_residual(cr[None, :])[0])
    return model


class MfsRobin(RobinBackend):
    """Robin function from an :class:`MfsModel`, with the band floor enforced."""

    name = "mfs"
    closed_form = False

    def __init__(self, model: MfsModel, spec: DomainSpec, band_floor: float = 0.02,
                 residual_tol: float = 1e-6):
        self.model = model
        self.spec = spec
        self.n = model.n
        self.band_floor = band_floor
        self.residual_tol = residual_tol

    def value(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=complex))
        X = to_real(P)
        return -self.model.harmonic_part(X, X)

    def distance(self, p):
        try:
            _, delta = boundary_project(self.spec, p)
            return delta
        except ProjectionError:
            # deep interior: distance to the collocation cloud is accurate enough
            x = to_real(np.asarray(p, complex))
            return float(np.min(np.linalg.norm(self.model.collocation - x, axis=1)))

    def check_point(self, p):
        d = self.distance(p)
        if d < self.band_floor:
            raise RobinError(f"pole within {d:.3g} of the boundary; MFS band floor is {self.band_floor}")
        res = float(self.model.boundary_residual(to_real(np.asarray(p, complex))[None, :])[0])
        return d, res


def mfs_robin(model: MfsModel, spec: DomainSpec, p) -> float:
    """Robin function at ``p`` from a built MFS model."""
    backend = MfsRobin(model, spec)
    backend.check_point(p)
    return float(backend.value(np.asarray(p, complex)[None, :])[0])


def robin_ball(p, r: float = 1.0, order: int = 3) -> RobinEval:
    """Closed-form RobinEval for the ball of radius ``r`` about 0 with psi = |z|^2 - r^2."""
    p = np.asarray(p, dtype=complex)
    be = BallRobin(np.zeros(p.size, complex), r)
    F0, d1, d2, d3 = be.analytic(p, order)
    psi = float(np.vdot(p, p).real - r**2)
    return RobinEval(p, float(F0), d1, d2, d3, psi, "ball")


def make_backend(kind: str, spec: DomainSpec, **mfs_options) -> RobinBackend:
    """Backend factory: ``"ball"``, ``"halfspace"`` or ``"mfs"``."""
    if kind == "ball":
        return BallRobin.from_spec(spec)
    if kind == "halfspace":
        return HalfSpaceRobin.from_spec(spec)
    if kind == "mfs":
        band = mfs_options.pop("band_floor", 0.02)
        return MfsRobin(mfs_build(spec, **mfs_options), spec, band_floor=band)
    raise ValueError(f"unknown backend {kind!r}")


# layout resolving poles up to |p| = 0.6 in the unit ball to ~1e-6 (about 16 s to build)
MFS_ACCURATE = {"M": 6000, "N": 4000, "inflation": 2.0}

DEFAULT_MFS_FD = FDPolicy(rel=0.02, min_step=1e-4)
DEFAULT_EXACT_FD = FDPolicy(rel=0.02, min_step=0.0)


def _symmetrize(d1, d2, d3, n):
    """Average each tensor with its conjugate-index image so conjugation symmetry is exact."""
    perm = np.r_[n : 2 * n, 0:n]
    if d1 is not None:
        d1 = 0.5 * (d1 + d1[perm].conj())
    if d2 is not None:
        d2 = 0.5 * (d2 + d2[np.ix_(perm, perm)].conj())
        d2 = 0.5 * (d2 + d2.T)
    if d3 is not None:
        d3 = 0.5 * (d3 + d3[np.ix_(perm, perm, perm)].conj())
    return d1, d2, d3


def robin_derivatives(backend: RobinBackend, spec: DomainSpec, p, order: int = 2,
                      fd: FDPolicy | None = None, method: str = "auto") -> RobinEval:
    """Lambda and its derivatives up to ``order`` (at most 3).

    ``method="auto"`` uses analytic derivatives for closed-form backends and
    finite differences for MFS; ``"fd"`` forces finite differences.
    """
    p = spec._check_point(p)
    if not 0 <= order <= 3:
        raise ValueError("order must be 0..3")
    psi = float(spec.psi(p))
    low, res = False, 0.0
    if method == "auto" and backend.closed_form:
        F0, d1, d2, d3 = backend.analytic(p, order)
        return RobinEval(p, float(F0), d1, d2, d3, psi, backend.name)
    if method not in ("auto", "fd"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(backend, MfsRobin):
        dist, res = backend.check_point(p)
        low = res > backend.residual_tol
        fd = fd or DEFAULT_MFS_FD
    else:
        dist = backend.distance(p)
        fd = fd or DEFAULT_EXACT_FD
    if order == 0:
        F0 = float(backend.value(p[None, :])[0])
        return RobinEval(p, F0, None, None, None, psi, backend.name, low, res)
    h = fd.step(dist)
    if h >= dist:
        raise RobinError("finite-difference stencil leaves the domain")
    F0, d1, d2, d3 = wirtinger_derivatives(backend.value, p, h, order, fd.richardson)
    d1, d2, d3 = _symmetrize(d1, d2, d3, p.size)
    return RobinEval(p, float(np.real(F0)), d1, d2, d3, psi, backend.name, low, res)


def normalized_robin(backend: RobinBackend, spec: DomainSpec, p, boundary_tol: float = 1e-14) -> float:
    """``Lambda psi^(2n-2)`` inside, ``-|d psi|^(2n-2)`` on the boundary."""
    p = spec._check_point(p)
    ev = spec.eval(p, 1)
    m = 2 * spec.n - 2
    if abs(ev.psi) <= boundary_tol:
        return float(-np.linalg.norm(ev.grad) ** m)
    if ev.psi > 0:
        raise RobinError("point outside the closed domain")
    return float(backend.value(p[None, :])[0] * ev.psi**m)


def normalized_robin_batch(backend: RobinBackend, spec: DomainSpec, P) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    return backend.value(P) * spec.psi(P) ** (2 * spec.n - 2)


def identity_residuals(backend: RobinBackend, spec: DomainSpec, p, fd: FDPolicy | None = None):
    """Residuals of the product-rule identities linking Lambda and lambda.

    ``Lambda_a psi^m = lambda_a - m lambda psi_a / psi`` and its second-order
    analogue, with ``lambda`` differentiated numerically and ``Lambda``
    analytically (``m = 2n - 2``).  Returns the max relative residuals
    ``(first, second)``.
    """
    p = spec._check_point(p)
    ev = robin_derivatives(backend, spec, p, 2)
    de = spec.eval(p, 2)
    m = 2 * spec.n - 2
    s = de.psi
    fd = fd or FDPolicy(rel=0.02, min_step=0.0)
    lam, l1, l2, _ = wirtinger_derivatives(lambda P: normalized_robin_batch(backend, spec, P), p,
                                           fd.step(backend.distance(p)), 2)
    g = de.d1
    lhs1 = ev.d1 * s**m
    rhs1 = l1 - m * lam * g / s
    r1 = np.max(np.abs(lhs1 - rhs1)) / np.max(np.abs(lhs1) + np.abs(rhs1))
    lhs2 = ev.d2 * s**m
    L = ev.lambda_big
    rhs2 = (l2 - m * s ** (m - 1) * (np.outer(ev.d1, g) + np.outer(g, ev.d1))
            - m * (m - 1) * L * s ** (m - 2) * np.outer(g, g) - m * L * s ** (m - 1) * de.d2)
    r2 = np.max(np.abs(lhs2 - rhs2)) / np.max(np.abs(lhs2) + np.abs(rhs2))
    return float(r1), float(r2)
