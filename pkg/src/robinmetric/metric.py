"""The Kahler metric with potential log(-Lambda), its inverse, determinant and derivatives.

With ``L = log(-Lambda)``,
``g_{a bbar} = Lambda_{a bbar}/Lambda - Lambda_a Lambda_bbar / Lambda^2`` and
the derivative tensor ``dg[c, a, b] = d g_{a bbar} / d p_c`` follows from
the quotient rule using third derivatives of Lambda.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .robin import RobinEval


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    g_inv: np.ndarray
    det: float
    cofactors: np.ndarray
    dg: np.ndarray | None = None
    positive_definite: bool = True

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def energy(self, v) -> float:
        v = np.asarray(v, dtype=complex)
        return float(np.real(v @ self.g @ v.conj()))

    def christoffel(self) -> np.ndarray:
        """``Gamma[a, j, k] = sum_b dg[j, k, b] g_inv[b, a]``."""
        if self.dg is None:
            raise MetricError("metric derivative not available")
        return np.einsum("jkb,ba->ajk", self.dg, self.g_inv)

    def to_dict(self) -> dict:
        def cplx(a):
            return None if a is None else np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "g": cplx(self.g),
            "g_inv": cplx(self.g_inv),
            "det": self.det,
            "cofactors": cplx(self.cofactors),
            "dg": cplx(self.dg),
            "positive_definite": self.positive_definite,
        }


def _mixed_parts(re: RobinEval):
    if re.d1 is None or re.d2 is None:
        raise MetricError("second derivatives of Lambda are required")
    if not re.lambda_big < 0:
        raise MetricError("Lambda must be negative")
    n = re.n
    L = re.lambda_big
    La = re.d1[:n]
    Lb = re.d1[n:]
    Lab = re.d2[:n, n:]
    return n, L, La, Lb, Lab


def metric_tensor(re: RobinEval) -> np.ndarray:
    """``g[a, b] = g_{a bbar}``; Hermitian."""
    n, L, La, Lb, Lab = _mixed_parts(re)
    g = Lab / L - np.outer(La, Lb) / L**2
    return 0.5 * (g + g.conj().T)


def metric_derivative(re: RobinEval) -> np.ndarray:
    """``dg[c, a, b] = d g_{a bbar} / d p_c`` for holomorphic ``c``.

    ``Lambda_{a bbar c}/Lambda - Lambda_{a bbar} Lambda_c / Lambda^2
    - (Lambda_{ac} Lambda_bbar + Lambda_a Lambda_{bbar c}) / Lambda^2
    + 2 Lambda_a Lambda_bbar Lambda_c / Lambda^3``.
    """
    n, L, La, Lb, Lab = _mixed_parts(re)
    if re.d3 is None:
        raise MetricError("third derivatives of Lambda are required")
    Labc = np.transpose(re.d3[:n, n:, :n], (2, 0, 1))  # [c, a, b]
    Lac = re.d2[:n, :n]
    Lbc = re.d2[n:, :n]  # [b, c] = Lambda_{bbar c}
    return (Labc / L
            - np.einsum("ab,c->cab", Lab, La) / L**2
            - np.einsum("ac,b->cab", Lac, Lb) / L**2
            - np.einsum("a,bc->cab", La, Lbc) / L**2
            + 2 * np.einsum("a,b,c->cab", La, Lb, La) / L**3)


def kahler_symmetry_residual(dg: np.ndarray) -> float:
    """``max |dg[c, a, b] - dg[a, c, b]| / max |dg|`` (0 when dg vanishes)."""
    scale = np.max(np.abs(dg))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(dg - dg.transpose(1, 0, 2))) / scale)


def cofactor_matrix(g: np.ndarray) -> np.ndarray:
    """``C[a, b] = (-1)^(a+b) det(g with row a and column b removed)``."""
    n = g.shape[0]
    C = np.empty_like(g, dtype=complex)
    for a in range(n):
        for b in range(n):
            minor = np.delete(np.delete(g, a, axis=0), b, axis=1)
            C[a, b] = (-1) ** (a + b) * (np.linalg.det(minor) if minor.size else 1.0)
    return C


def inverse_det_cofactors(g: np.ndarray):
    """``(g_inv, det, cofactors)`` with the inverse from LU and the cofactors from minors."""
    g = np.asarray(g, dtype=complex)
    if not np.allclose(g, g.conj().T, rtol=1e-12, atol=1e-12 * np.max(np.abs(g))):
        raise MetricError("metric tensor is not Hermitian")
    det = np.linalg.det(g)
    if det == 0 or not np.isfinite(det):
        raise MetricError("metric tensor is singular")
    g_inv = np.linalg.inv(g)
    return g_inv, float(det.real), cofactor_matrix(g)


def metric_data(re: RobinEval, with_derivative: bool = True, strict: bool = False) -> MetricData:
    """Assemble :class:`MetricData`; non-positive-definite tensors warn (or raise if ``strict``)."""
    g = metric_tensor(re)
    eig = np.linalg.eigvalsh(g)
    pd = bool(eig.min() > 0)
    if not pd:
        msg = f"metric not positive definite (min eigenvalue {eig.min():.3e})"
        if strict:
            raise MetricError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    try:
        g_inv, det, cof = inverse_det_cofactors(g)
    except MetricError:
        if strict:
            raise
        n = g.shape[0]
        g_inv, det, cof = np.full((n, n), np.nan + 0j), 0.0, cofactor_matrix(g)
    dg = metric_derivative(re) if with_derivative and re.d3 is not None else None
    return MetricData(g, g_inv, det, cof, dg, pd)


def cofactor_expansion_det(g: np.ndarray, cofactors: np.ndarray, row: int | None = None) -> complex:
    """``sum_b g[row, b] C[row, b]``; the last row by default."""
    row = g.shape[0] - 1 if row is None else row
    return complex(g[row] @ cofactors[row])


def affine_pullback_deviation(g_orig: np.ndarray, g_image: np.ndarray, U: np.ndarray) -> float:
    """Relative deviation between ``g`` and the pullback ``U^T g~ conj(U)`` under ``z -> U z + c``."""
    pull = U.T @ g_image @ U.conj()
    return float(np.max(np.abs(pull - g_orig)) / np.max(np.abs(g_orig)))


def affine_pullback_check(backend, image_backend, spec, image_spec, nmap, points) -> float:
    """Max deviation of the metric pullback over sample points.

    ``nmap`` maps the original domain onto the image domain through
    ``w = U (z - translation)``.
    """
    from .robin import robin_derivatives

    worst = 0.0
    for p in points:
        g0 = metric_tensor(robin_derivatives(backend, spec, p, 2))
        w = nmap.forward(p)
        g1 = metric_tensor(robin_derivatives(image_backend, image_spec, w, 2))
        worst = max(worst, affine_pullback_deviation(g0, g1, nmap.rotation))
    return worst
