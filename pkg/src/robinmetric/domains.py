"""Smoothly bounded domains {psi < 0} in C^n given by defining functions.

Built-in defining functions are real polynomials in ``z`` and ``conj(z)``
stored as monomial tables, so Wirtinger derivatives of every order are
exact.  Affine images (translations, unitary rotations, dilations) are
represented lazily by :class:`AffineSpec` and differentiated by the chain
rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.stats import qmc

from .wirtinger import combined, conj_index, real_from_wirtinger_matrix, to_complex, to_real


class DomainError(ValueError):
    """Raised for invalid domains or operations a domain does not support."""


class ProjectionError(RuntimeError):
    """Boundary projection did not converge."""


@dataclass(frozen=True)
class DefiningEval:
    """Value and combined-index Wirtinger derivatives of psi at a point."""

    psi: float
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    d3: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.d1.shape[0] // 2

    @property
    def grad(self) -> np.ndarray:
        """Holomorphic gradient ``(psi_1, ..., psi_n)``."""
        return self.d1[: self.n]

    @property
    def hess_mixed(self) -> np.ndarray:
        """``H[a, b] = psi_{a bbar}``; Hermitian."""
        return self.d2[: self.n, self.n :]

    @property
    def hess_holo(self) -> np.ndarray:
        return self.d2[: self.n, : self.n]

    @property
    def third(self) -> np.ndarray | None:
        return self.d3

    def real_gradient(self) -> np.ndarray:
        R = real_from_wirtinger_matrix(self.n)
        return (R @ self.d1).real

    def real_hessian(self) -> np.ndarray:
        R = real_from_wirtinger_matrix(self.n)
        return (R @ self.d2 @ R.T).real


class DomainSpec:
    """Base class: a defining function psi on C^n and its derivatives."""

    kind: str = "abstract"
    n: int
    bounded: bool = True

    def psi(self, z: np.ndarray) -> np.ndarray:
        """Vectorized value of psi for points of shape ``(..., n)``."""
        raise NotImplementedError

    def eval(self, p: np.ndarray, order: int = 2) -> DefiningEval:
        raise NotImplementedError

    def center(self) -> np.ndarray:
        """An interior point from which the domain is star-shaped."""
        raise NotImplementedError

    def radius_bound(self) -> float:
        """Radius about :meth:`center` of a ball containing the domain."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # shared helpers -------------------------------------------------
    def _check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=complex)
        if p.shape != (self.n,):
            raise DomainError(f"expected a point of shape ({self.n},), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("point has non-finite coordinates")
        return p

    def contains(self, z) -> bool:
        return bool(self.psi(np.asarray(z, dtype=complex)) < 0)

    def gradient_norm(self, p) -> float:
        """Wirtinger norm |d psi| = (sum |psi_a|^2)^(1/2)."""
        return float(np.linalg.norm(self.eval(p, 1).grad))

    def outward_normal(self, p) -> np.ndarray:
        """Euclidean unit outward normal, as a complex vector."""
        g = self.eval(p, 1).grad
        nrm = np.linalg.norm(g)
        if nrm == 0:
            raise DomainError("gradient of psi vanishes")
        return g.conj() / nrm


# ---------------------------------------------------------------------------
# polynomial defining functions


@dataclass(frozen=True)
class Monomials:
    """Table of terms ``coef * z^A * conj(z)^B``."""

    coef: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @classmethod
    def from_terms(cls, terms, n: int) -> "Monomials":
        acc: dict[tuple, complex] = {}
        for c, a, b in terms:
            key = (tuple(int(x) for x in a), tuple(int(x) for x in b))
            if len(key[0]) != n or len(key[1]) != n:
                raise DomainError("monomial exponent length does not match n")
            acc[key] = acc.get(key, 0) + complex(c)
        items = [(c, a, b) for (a, b), c in acc.items() if c != 0]
        if not items:
            return cls(np.zeros(0, complex), np.zeros((0, n), int), np.zeros((0, n), int))
        coef = np.array([c for c, _, _ in items], dtype=complex)
        A = np.array([a for _, a, _ in items], dtype=int)
        B = np.array([b for _, _, b in items], dtype=int)
        return cls(coef, A, B)

    def is_real(self, tol: float = 1e-14) -> bool:
        lookup = {(tuple(a), tuple(b)): c for c, a, b in zip(self.coef, self.A, self.B)}
        for (a, b), c in lookup.items():
            if abs(lookup.get((b, a), 0) - np.conj(c)) > tol * max(1.0, abs(c)):
                return False
        return True

    def derivative(self, a: int) -> "Monomials":
        n = self.A.shape[1]
        if a < n:
            fac = self.A[:, a]
            A = self.A.copy()
            A[:, a] -= 1
            B = self.B
        else:
            fac = self.B[:, a - n]
            B = self.B.copy()
            B[:, a - n] -= 1
            A = self.A
        keep = fac != 0
        return Monomials(self.coef[keep] * fac[keep], A[keep], B[keep])

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.coef.size == 0:
            return np.zeros(z.shape[:-1], dtype=complex)
        zz = z[..., None, :]
        vals = np.prod(zz ** self.A, axis=-1) * np.prod(zz.conj() ** self.B, axis=-1)
        return vals @ self.coef


class PolynomialSpec(DomainSpec):
    """Defining function given as a real polynomial in z and conj(z)."""

    def __init__(self, n: int, terms, *, kind: str = "custom", params: dict | None = None,
                 center=None, radius_bound: float | None = None, bounded: bool = True):
        if n < 2:
            raise DomainError("dimension n must be at least 2")
        self.n = int(n)
        self.kind = kind
        self.params = dict(params or {})
        self.poly = Monomials.from_terms(terms, self.n)
        if not self.poly.is_real():
            raise DomainError("polynomial is not real-valued (missing conjugate terms)")
        self._center = np.zeros(self.n, complex) if center is None else np.asarray(center, complex)
        self._radius = radius_bound
        self.bounded = bounded
        self._cache: dict[tuple, Monomials] = {(): self.poly}

    def _deriv(self, idx: tuple) -> Monomials:
        idx = tuple(sorted(idx))
        if idx not in self._cache:
            self._cache[idx] = self._deriv(idx[:-1]).derivative(idx[-1])
        return self._cache[idx]

    def psi(self, z):
        return self.poly(z).real

    def eval(self, p, order: int = 2) -> DefiningEval:
        p = self._check_point(p)
        if not 0 <= order <= 3:
            raise DomainError(f"unsupported derivative order {order}")
        m = 2 * self.n
        out = [float(self.poly(p).real)]
        for k in range(1, 4):
            if k > order:
                out.append(None)
                continue
            T = np.zeros((m,) * k, dtype=complex)
            for idx in itertools.combinations_with_replacement(range(m), k):
                val = self._deriv(idx)(p)
                for perm in set(itertools.permutations(idx)):
                    T[perm] = val
            out.append(T)
        return DefiningEval(*out)

    def center(self):
        return self._center.copy()

    def radius_bound(self):
        if self._radius is None:
            raise DomainError("no radius bound known for this domain")
        return float(self._radius)

    def to_dict(self):
        d = {"kind": self.kind, "n": self.n, "params": _jsonable(self.params)}
        if self.kind == "custom":
            d["params"] = {
                "terms": [[[c.real, c.imag], a.tolist(), b.tolist()]
                          for c, a, b in zip(self.poly.coef, self.poly.A, self.poly.B)],
                "center": [[c.real, c.imag] for c in self._center],
                "radius_bound": self._radius,
            }
        return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _unit(n: int, j: int) -> tuple:
    return tuple(1 if i == j else 0 for i in range(n))


def _abs_sq_terms(n: int, weights) -> list:
    zero = (0,) * n
    terms = [(-1.0, zero, zero)]
    for j, w in enumerate(weights):
        terms.append((float(w), _unit(n, j), _unit(n, j)))
    return terms


def ball(n: int, radius: float = 1.0) -> PolynomialSpec:
    """Ball {|z| < r} with psi = |z|^2 - r^2."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    zero = (0,) * n
    terms = [(-radius**2, zero, zero)] + [(1.0, _unit(n, j), _unit(n, j)) for j in range(n)]
    return PolynomialSpec(n, terms, kind="ball", params={"radius": float(radius)},
                          radius_bound=radius)


def ellipsoid(weights) -> PolynomialSpec:
    """Ellipsoid with psi = sum a_j |z_j|^2 - 1."""
    w = [float(x) for x in weights]
    if min(w) <= 0:
        raise DomainError("ellipsoid weights must be positive")
    n = len(w)
    return PolynomialSpec(n, _abs_sq_terms(n, w), kind="ellipsoid", params={"weights": w},
                          radius_bound=1.0 / np.sqrt(min(w)))


PERTURBATIONS = {
    "re_z1_sq": "Re(z_1^2)",
    "abs_z1_4": "|z_1|^4",
    "re_z1_zbar2": "Re(z_1 conj(z_2))",
}


def perturbed_ball(n: int, eps: float, perturbation: str = "re_z1_sq") -> PolynomialSpec:
    """Unit ball perturbed as psi = |z|^2 - 1 + eps * phi(z)."""
    zero = (0,) * n
    terms = [(-1.0, zero, zero)] + [(1.0, _unit(n, j), _unit(n, j)) for j in range(n)]
    e1 = _unit(n, 0)
    if perturbation == "re_z1_sq":
        two = tuple(2 if i == 0 else 0 for i in range(n))
        terms += [(eps / 2, two, zero), (eps / 2, zero, two)]
    elif perturbation == "abs_z1_4":
        two = tuple(2 if i == 0 else 0 for i in range(n))
        terms += [(eps, two, two)]
    elif perturbation == "re_z1_zbar2":
        e2 = _unit(n, 1)
        terms += [(eps / 2, e1, e2), (eps / 2, e2, e1)]
    else:
        raise DomainError(f"unknown perturbation {perturbation!r}")
    if perturbation == "abs_z1_4" and eps < 0:
        raise DomainError("negative quartic perturbation gives an unbounded set")
    if abs(eps) >= 0.5:
        raise DomainError("perturbation size must satisfy |eps| < 0.5")
    return PolynomialSpec(n, terms, kind="perturbed_ball",
                          params={"eps": float(eps), "perturbation": perturbation},
                          radius_bound=1.0 / np.sqrt(1 - 2 * abs(eps)))


def halfspace(b) -> PolynomialSpec:
    """Half-space {2 Re <b, z> - 1 < 0} with <b, z> = sum b_j z_j."""
    b = np.asarray(b, dtype=complex)
    n = b.size
    if np.linalg.norm(b) == 0:
        raise DomainError("half-space normal must be nonzero")
    zero = (0,) * n
    terms = [(-1.0, zero, zero)]
    for j in range(n):
        terms.append((b[j], _unit(n, j), zero))
        terms.append((np.conj(b[j]), zero, _unit(n, j)))
    return PolynomialSpec(n, terms, kind="halfspace", params={"b": [complex(x) for x in b]},
                          bounded=False)


def custom_polynomial(n: int, terms, center=None, radius_bound=None) -> PolynomialSpec:
    return PolynomialSpec(n, terms, kind="custom", center=center, radius_bound=radius_bound)


# ---------------------------------------------------------------------------
# affine images


class AffineSpec(DomainSpec):
    """psi~(w) = scale * psi(shift + A w) for the base defining function psi.

    The domain is the image of the base domain under w = A^{-1}(z - shift).
    """

    kind = "affine"

    def __init__(self, base: DomainSpec, shift, A, scale: float = 1.0):
        self.base = base
        self.n = base.n
        self.shift = np.asarray(shift, dtype=complex)
        self.A = np.asarray(A, dtype=complex)
        if scale <= 0:
            raise DomainError("scale must be positive")
        self.scale = float(scale)
        self.bounded = base.bounded
        n = self.n
        M = np.zeros((2 * n, 2 * n), dtype=complex)
        M[:n, :n] = self.A
        M[n:, n:] = self.A.conj()
        self._M = M

    def to_base(self, w):
        w = np.asarray(w, dtype=complex)
        return self.shift + w @ self.A.T

    def from_base(self, z):
        z = np.asarray(z, dtype=complex)
        return np.linalg.solve(self.A, (z - self.shift).T).T

    def psi(self, w):
        return self.scale * self.base.psi(self.to_base(w))

    def eval(self, p, order: int = 2) -> DefiningEval:
        p = self._check_point(p)
        ev = self.base.eval(self.to_base(p), order)
        M, s = self._M, self.scale
        d1 = s * (M.T @ ev.d1) if ev.d1 is not None else None
        d2 = s * (M.T @ ev.d2 @ M) if ev.d2 is not None else None
        d3 = (s * np.einsum("abc,ai,bj,ck->ijk", ev.d3, M, M, M, optimize=True)
              if ev.d3 is not None else None)
        return DefiningEval(s * ev.psi, d1, d2, d3)

    def center(self):
        return self.from_base(self.base.center())

    def radius_bound(self):
        smin = np.linalg.svd(self.A, compute_uv=False).min()
        return self.base.radius_bound() / smin

    def to_dict(self):
        return {
            "kind": "affine",
            "n": self.n,
            "params": {
                "base": self.base.to_dict(),
                "shift": [[c.real, c.imag] for c in self.shift],
                "matrix": [[[c.real, c.imag] for c in row] for row in self.A],
                "scale": self.scale,
            },
        }


# ---------------------------------------------------------------------------
# serialization


def _cplx(v):
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    return complex(v)


def spec_from_dict(d: dict) -> DomainSpec:
    """Build a spec from ``{kind, n, params}`` (the TOML/JSON domain table)."""
    try:
        kind = d["kind"]
        params = d.get("params", {})
        n = d.get("n")
        if kind == "ball":
            return ball(int(n), float(params.get("radius", 1.0)))
        if kind == "ellipsoid":
            w = params["weights"]
            if n is not None and len(w) != int(n):
                raise DomainError("weights length does not match n")
            return ellipsoid(w)
        if kind == "perturbed_ball":
            return perturbed_ball(int(n), float(params["eps"]),
                                  params.get("perturbation", "re_z1_sq"))
        if kind == "halfspace":
            b = [_cplx(x) for x in params["b"]]
            return halfspace(b)
        if kind == "custom":
            terms = [(_cplx(c), a, b) for c, a, b in params["terms"]]
            center = params.get("center")
            center = None if center is None else [_cplx(c) for c in center]
            return custom_polynomial(int(n), terms, center, params.get("radius_bound"))
        if kind == "affine":
            base = spec_from_dict(params["base"])
            shift = [_cplx(c) for c in params["shift"]]
            A = [[_cplx(c) for c in row] for row in params["matrix"]]
            return AffineSpec(base, shift, A, float(params.get("scale", 1.0)))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed domain table: {exc!r}") from exc
    raise DomainError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# geometry operations


def eval_defining(spec: DomainSpec, p, order: int = 2) -> DefiningEval:
    return spec.eval(p, order)


def levi_form(spec: DomainSpec, p, v) -> float:
    """sum_{a,b} psi_{a bbar}(p) v_a conj(v_b)."""
    v = np.asarray(v, dtype=complex)
    H = spec.eval(p, 2).hess_mixed
    return float(np.real(v @ H @ v.conj()))


def tangent_levi_min(ev: DefiningEval) -> float:
    """Smallest eigenvalue of the Levi form on {v : sum psi_a v_a = 0}."""
    g = ev.grad
    n = g.size
    # orthonormal basis of the complex tangent space: vectors orthogonal to conj(g)
    basis = _complete_basis(g.conj() / np.linalg.norm(g))[1:]
    H = ev.hess_mixed
    # Levi(v) = v^T H conj(v); in basis coordinates v = c^T basis
    L = basis @ H @ basis.conj().T
    return float(np.linalg.eigvalsh(0.5 * (L + L.conj().T)).min())


def _complete_basis(r: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of C^n (as rows) whose first row is the unit vector r."""
    n = r.size
    rows = [r / np.linalg.norm(r)]
    for j in range(n):
        e = np.zeros(n, complex)
        e[j] = 1.0
        for _ in range(2):
            for q in rows:
                e = e - (q.conj() @ e) * q
        nrm = np.linalg.norm(e)
        if nrm > tol:
            rows.append(e / nrm)
        if len(rows) == n:
            break
    return np.array(rows)


def sphere_points(count: int, n: int, seed: int, smooth_steps: int = 0) -> np.ndarray:
    """Quasi-uniform points on the unit sphere of C^n = R^{2n}.

    Scrambled Sobol points are pushed to the sphere through the
    measure-preserving map (|z_j|^2 uniform on the simplex, phases
    uniform); optional repulsion steps even out the spacing.
    """
    if count:
        m = max(int(np.ceil(np.log2(count))), 1)
        u = qmc.Sobol(2 * n - 1, scramble=True, seed=seed).random_base2(m)[:count]
    else:
        u = np.zeros((0, 2 * n - 1))
    s = np.zeros((count, n))
    rem = np.ones(count)
    for j in range(n - 1):
        k = n - 1 - j
        x = 1 - (1 - u[:, j]) ** (1.0 / k)
        s[:, j] = rem * x
        rem = rem - s[:, j]
    s[:, n - 1] = rem
    r = np.sqrt(np.clip(s, 0, None))
    z = r * np.exp(2j * np.pi * u[:, n - 1:])
    x = to_real(z)
    d = 2 * n
    for _ in range(smooth_steps):
        f = np.zeros_like(x)
        for a in range(0, count, 512):
            diff = x[a:a + 512, None, :] - x[None, :, :]
            r2 = np.einsum("ijk,ijk->ij", diff, diff)
            r2[r2 == 0] = np.inf
            f[a:a + 512] = np.einsum("ijk,ij->ik", diff, r2 ** (-(d + 1) / 2))
        f -= np.sum(f * x, axis=1, keepdims=True) * x
        spacing = (2.0 * np.pi ** (d / 2) / _gamma(d / 2) / count) ** (1.0 / (d - 1))
        x = x + 0.3 * spacing * f / np.linalg.norm(f, axis=1).mean()
        x /= np.linalg.norm(x, axis=1, keepdims=True)
    return to_complex(x)


def _gamma(x):
    from math import gamma
    return gamma(x)


def radial_boundary(spec: DomainSpec, directions: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Intersect rays center + t*u (t > 0) with the boundary.

    Vectorized bisection followed by Newton polishing; assumes the domain
    is star-shaped about ``spec.center()``.
    """
    if not spec.bounded:
        raise DomainError("unbounded domain unsupported here")
    c = spec.center()
    if spec.psi(c) >= 0:
        raise DomainError("center is not an interior point")
    u = np.asarray(directions, dtype=complex)
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    hi = np.full(u.shape[0], 1.05 * spec.radius_bound())
    lo = np.zeros(u.shape[0])
    if np.any(spec.psi(c + hi[:, None] * u) <= 0):
        raise DomainError("radius bound does not enclose the domain")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        inside = spec.psi(c + mid[:, None] * u) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    t = 0.5 * (lo + hi)
    # Newton polish along each ray: d/dt psi = 2 Re sum psi_a u_a
    pts = c + t[:, None] * u
    for i in range(pts.shape[0]):
        for _ in range(3):
            ev = spec.eval(pts[i], 1)
            slope = 2.0 * np.real(ev.grad @ u[i])
            if slope <= 0 or abs(ev.psi) < tol:
                break
            t[i] -= ev.psi / slope
            pts[i] = c + t[i] * u[i]
    return pts


@dataclass
class PseudoconvexityReport:
    min_eigenvalue: float
    passed: bool
    samples: int
    failures: list = field(default_factory=list)
    points: np.ndarray | None = None


def strong_pseudoconvexity_check(spec: DomainSpec, sample_count: int = 256,
                                 seed: int = 0) -> PseudoconvexityReport:
    """Minimum Levi-form eigenvalue on the complex tangent space over sampled boundary points."""
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1")
    if not spec.bounded:
        raise DomainError("unbounded domain unsupported here")
    n = spec.n
    # coordinate-axis rays first (where extremes of diagonal forms sit), then random rays
    axes = np.concatenate([s * np.eye(n) for s in (1, 1j, -1, -1j)])
    rng = np.random.default_rng(seed)
    extra = max(sample_count - axes.shape[0], 0)
    rand = rng.standard_normal((extra, n)) + 1j * rng.standard_normal((extra, n))
    dirs = np.concatenate([axes, rand])[:sample_count]
    pts = radial_boundary(spec, dirs)
    vals, failures = [], []
    for i, z in enumerate(pts):
        try:
            # re-solve as a projection from just inside, so failures are caught per sample
            zb, _ = boundary_project(spec, z - 1e-3 * spec.outward_normal(z))
            vals.append(tangent_levi_min(spec.eval(zb, 2)))
        except (ProjectionError, DomainError) as exc:
            failures.append((i, str(exc)))
    mn = float(min(vals)) if vals else float("nan")
    return PseudoconvexityReport(mn, bool(vals) and mn > 0, len(vals), failures, pts)


def boundary_project(spec: DomainSpec, p, max_iter: int = 50, tol: float = 1e-12):
    """Nearest boundary point pi(p) and distance delta = |p - pi(p)|.

    Solves zeta - p = mu * grad psi(zeta), psi(zeta) = 0 by Newton's method
    in real coordinates, started from a gradient-flow guess.  The solution is
    the nearest point whenever ``p`` lies within the reach of the boundary
    (closer than the smallest principal curvature radius); deeper points may
    return another critical point of the distance, whose distance is never
    smaller than the true one.
    """
    p = spec._check_point(p)
    x0 = to_real(p)
    ev = spec.eval(p, 1)
    g = ev.real_gradient()
    if np.linalg.norm(g) < 1e-12:
        raise ProjectionError("gradient vanishes at p; nearest boundary point is not unique")
    x = x0.copy()
    for _ in range(20):
        ev = spec.eval(to_complex(x), 1)
        g = ev.real_gradient()
        gg = g @ g
        if gg == 0:
            raise ProjectionError("gradient flow hit a critical point")
        x = x - ev.psi * g / gg
        if abs(ev.psi) < 1e-6:
            break
    ev = spec.eval(to_complex(x), 1)
    g = ev.real_gradient()
    mu = (x - x0) @ g / (g @ g)
    d = x0.size
    for it in range(max_iter):
        ev = spec.eval(to_complex(x), 2)
        g = ev.real_gradient()
        H = ev.real_hessian()
        F = np.concatenate([x - x0 - mu * g, [ev.psi]])
        scale = max(1.0, np.linalg.norm(x - x0))
        if np.linalg.norm(F) < tol * scale:
            break
        J = np.zeros((d + 1, d + 1))
        J[:d, :d] = np.eye(d) - mu * H
        J[:d, d] = -g
        J[d, :d] = g
        step = np.linalg.solve(J, -F)
        x = x + step[:d]
        mu = mu + step[d]
    else:
        raise ProjectionError(f"Newton projection did not converge in {max_iter} iterations")
    zeta = to_complex(x)
    return zeta, float(np.linalg.norm(x - x0))


@dataclass(frozen=True)
class NormalizationMap:
    """w = U (z - translation); maps the chosen boundary point to 0."""

    translation: np.ndarray
    rotation: np.ndarray
    scale: float = 1.0

    def forward(self, z):
        return (np.asarray(z, complex) - self.translation) @ self.rotation.T

    def inverse(self, w):
        return self.translation + np.asarray(w, complex) @ self.rotation.conj()


def normalize_dagger(spec: DomainSpec, q, tol: float = 1e-10):
    """Move boundary point q to 0 with d psi~(0) = (0, ..., 0, 1).

    Returns ``(NormalizationMap, AffineSpec)``.  The new defining function
    is the composed psi times the positive constant 1/|d psi(q)|.
    """
    q = spec._check_point(q)
    ev = spec.eval(q, 1)
    if abs(ev.psi) > tol * max(1.0, np.linalg.norm(ev.d1)):
        raise DomainError(f"q is not a boundary point (psi(q) = {ev.psi:.3e})")
    g = ev.grad
    gn = np.linalg.norm(g)
    if gn == 0:
        raise DomainError("zero gradient at q")
    basis = _complete_basis(g.conj() / gn)
    W = np.vstack([basis[1:], basis[:1]])  # W @ g = |g| e_n
    U = W.conj()
    nmap = NormalizationMap(q.copy(), U, 1.0 / gn)
    return nmap, AffineSpec(spec, q, U.conj().T, 1.0 / gn)


@dataclass(frozen=True)
class RescaleMap:
    """w = (z - p) / t with t = -psi(p)."""

    center: np.ndarray
    factor: float

    def forward(self, z):
        return (np.asarray(z, complex) - self.center) / self.factor

    def inverse(self, w):
        return self.center + self.factor * np.asarray(w, complex)


def rescale_domain(spec: DomainSpec, p):
    """The rescaled domain D(p) = {(z - p)/(-psi(p))} with defining function psi(z)/(-psi(p))."""
    p = spec._check_point(p)
    val = float(spec.psi(p))
    if val >= 0:
        raise DomainError("rescaling requires an interior point (psi(p) < 0)")
    t = -val
    return RescaleMap(p.copy(), t), AffineSpec(spec, p, t * np.eye(spec.n), 1.0 / t)


def boundary_halfspace(spec: DomainSpec, p0) -> PolynomialSpec:
    """Limit of D(p) as p -> p0 on the boundary: {2 Re <d psi(p0), w> < 1}."""
    return halfspace(spec.eval(p0, 1).grad)
