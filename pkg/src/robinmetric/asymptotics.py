"""Boundary asymptotics of the Robin function and its metric along inner normals.

Each :class:`AsymptoticKind` pairs a scaled quantity (a derivative of
Lambda or of the metric multiplied by a power of psi) with its limit as the
pole approaches a boundary point along the inner normal.  Indices are
combined Wirtinger indices (``a < n`` holomorphic, ``a >= n`` barred) for
derivatives of Lambda and plain holomorphic indices ``0..n-1`` for metric
components.  Kinds marked ``normalized`` assume psi(0) = 0 and
``d psi(0) = (0, ..., 0, 1)`` at the boundary point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .domains import DomainError, DomainSpec
from .metric import metric_data
from .robin import FDPolicy, RobinBackend, robin_derivatives


class AsymptoticKind(enum.Enum):
    LA0 = "LA0"
    LA1 = "LA1"
    LA2 = "LA2"
    LA3 = "LA3"
    G_SCALE = "G_SCALE"
    DG_SCALE = "DG_SCALE"
    DPSI_RATIO = "DPSI_RATIO"
    FINE_LA1 = "FINE_LA1"
    FINE_LA2 = "FINE_LA2"
    FINE_G = "FINE_G"
    DET_SCALE = "DET_SCALE"
    GINV_SCALE = "GINV_SCALE"
    THIRD_LA = "THIRD_LA"
    DG_FINE = "DG_FINE"

    @classmethod
    def parse(cls, tag) -> "AsymptoticKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ValueError(f"unknown asymptotic kind {tag!r}") from None


@dataclass(frozen=True)
class KindInfo:
    index_types: tuple  # "c" combined, "h" holomorphic
    order: int          # derivative order of Lambda needed
    normalized: bool
    exact_on_ball: bool = False


KIND_INFO = {
    AsymptoticKind.LA0: KindInfo((), 0, False, True),
    AsymptoticKind.LA1: KindInfo(("c",), 1, False),
    AsymptoticKind.LA2: KindInfo(("c", "c"), 2, False),
    AsymptoticKind.LA3: KindInfo(("c", "c", "c"), 3, False),
    AsymptoticKind.G_SCALE: KindInfo(("h", "h"), 2, False),
    AsymptoticKind.DG_SCALE: KindInfo(("h", "h", "h"), 3, False),
    AsymptoticKind.DPSI_RATIO: KindInfo(("c",), 0, True),
    AsymptoticKind.FINE_LA1: KindInfo(("c",), 1, True),
    AsymptoticKind.FINE_LA2: KindInfo(("c", "c"), 2, True),
    AsymptoticKind.FINE_G: KindInfo(("h", "h"), 2, True),
    AsymptoticKind.DET_SCALE: KindInfo((), 2, True, True),
    AsymptoticKind.GINV_SCALE: KindInfo(("h",), 2, True),
    AsymptoticKind.THIRD_LA: KindInfo(("h", "h", "c"), 3, True),
    AsymptoticKind.DG_FINE: KindInfo(("h", "h", "c"), 3, True),
}


def validate_indices(kind, n: int, indices=()) -> tuple:
    """Check the index tuple against the kind's arity and hypotheses."""
    kind = AsymptoticKind.parse(kind)
    info = KIND_INFO[kind]
    idx = tuple(int(i) for i in indices)
    if len(idx) != len(info.index_types):
        raise ValueError(f"{kind.value} takes {len(info.index_types)} indices, got {len(idx)}")
    for i, t in zip(idx, info.index_types):
        hi = n if t == "h" else 2 * n
        if not 0 <= i < hi:
            raise ValueError(f"index {i} out of range for {kind.value}")
    normal = {n - 1, 2 * n - 1}
    if kind in (AsymptoticKind.DPSI_RATIO, AsymptoticKind.FINE_LA1, AsymptoticKind.FINE_LA2):
        if idx[0] in normal:
            raise ValueError(f"{kind.value} requires a first index different from n and n-bar")
    if kind is AsymptoticKind.FINE_G and idx[0] == n - 1:
        raise ValueError("FINE_G requires alpha != n")
    if kind in (AsymptoticKind.THIRD_LA, AsymptoticKind.DG_FINE) and idx[1] == n - 1:
        raise ValueError(f"{kind.value} requires beta != n")
    if kind is AsymptoticKind.GINV_SCALE and idx[0] != n - 1:
        raise ValueError("GINV_SCALE has a closed-form limit only for beta = n")
    return idx


def normal_sequence(spec: DomainSpec, q, deltas) -> list:
    """Points ``q - delta * (outer unit normal at q)`` for decreasing positive deltas."""
    d = np.asarray(deltas, dtype=float)
    if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
        raise ValueError("deltas must be positive and strictly decreasing")
    q = spec._check_point(q)
    nu = spec.outward_normal(q)
    pts = [q - t * nu for t in d]
    for t, p in zip(d, pts):
        if spec.psi(p) >= 0:
            raise DomainError(f"normal point at depth {t} is outside the domain")
    return pts


def _check_normalized(spec: DomainSpec, q, tol: float = 1e-10):
    ev = spec.eval(q, 1)
    target = np.zeros(spec.n)
    target[-1] = 1.0
    if abs(ev.psi) > tol or np.max(np.abs(ev.grad - target)) > tol:
        raise DomainError("boundary point is not normalized (psi(q)=0, d psi(q)=e_n required)")


def _dg_combined(md, c: int, a: int, b: int, n: int) -> complex:
    """``d g_{a bbar} / d p_c`` for a combined index ``c``."""
    if c < n:
        return md.dg[c, a, b]
    return np.conj(md.dg[c - n, b, a])


def scaled_quantity(kind, backend: RobinBackend, spec: DomainSpec, p, indices=(),
                    fd: FDPolicy | None = None, method: str = "auto") -> complex:
    """The left-hand side for ``kind`` at the interior point ``p``."""
    kind = AsymptoticKind.parse(kind)
    n = spec.n
    idx = validate_indices(kind, n, indices)
    info = KIND_INFO[kind]
    m = 2 * n - 2
    de = spec.eval(p, 1)
    s = de.psi
    if kind is AsymptoticKind.DPSI_RATIO:
        return complex(de.d1[idx[0]] / s)
    re = robin_derivatives(backend, spec, p, info.order, fd=fd, method=method)
    K = AsymptoticKind
    if kind is K.LA0:
        return complex(re.lambda_big * s**m)
    if kind is K.LA1:
        return complex(re.d1[idx[0]] * s ** (m + 1))
    if kind is K.LA2:
        return complex(re.d2[idx] * s ** (m + 2))
    if kind is K.LA3:
        return complex(re.d3[idx] * s ** (m + 3))
    if kind is K.FINE_LA1:
        return complex(re.d1[idx[0]] * s**m)
    if kind is K.FINE_LA2:
        return complex(re.d2[idx] * s ** (m + 1))
    if kind is K.THIRD_LA:
        a, b, c = idx
        return complex(re.d3[a, b + n, c] * s ** (2 * n))
    md = metric_data(re, with_derivative=info.order >= 3)
    if kind is K.G_SCALE:
        return complex(md.g[idx] * s**2)
    if kind is K.FINE_G:
        return complex(md.g[idx] * s)
    if kind is K.DG_SCALE:
        a, b, c = idx
        return complex(md.dg[c, a, b] * s**3)
    if kind is K.DG_FINE:
        a, b, c = idx
        return complex(_dg_combined(md, c, a, b, n) * s**2)
    if kind is K.DET_SCALE:
        return complex(md.det * s ** (n + 1))
    if kind is K.GINV_SCALE:
        # g^{n bbar} = Delta_{n bbar} / det, by cofactors along the last row
        return complex(md.cofactors[n - 1, idx[0]] / md.det / s**2)
    raise AssertionError(kind)


def evaluate_limit(kind, spec: DomainSpec, q, indices=(), constants: str = "original") -> complex:
    """Closed-form limit of :func:`scaled_quantity` at the boundary point ``q``.

    ``constants="corrected"`` switches THIRD_LA and DG_FINE (normal case
    ``c in {n, nbar}``) to the constants obtained with the corrected normal
    derivative of the reflected Green function; all other kinds are
    unaffected.
    """
    kind = AsymptoticKind.parse(kind)
    if constants not in ("original", "corrected"):
        raise ValueError(f"unknown constants {constants!r}")
    n = spec.n
    idx = validate_indices(kind, n, indices)
    info = KIND_INFO[kind]
    if info.normalized:
        _check_normalized(spec, q)
    ev = spec.eval(q, 2)
    d1, d2 = ev.d1, ev.d2
    m = 2 * n - 2
    nn, nb = n - 1, 2 * n - 1
    K = AsymptoticKind
    grad_pow = np.linalg.norm(ev.grad) ** m
    bar = lambda j: j + n  # noqa: E731 - barred holomorphic index
    if kind is K.LA0:
        return complex(-grad_pow)
    if kind is K.LA1:
        return complex(m * d1[idx[0]] * grad_pow)
    if kind is K.LA2:
        a, b = idx
        return complex(-m * (m + 1) * d1[a] * d1[b] * grad_pow)
    if kind is K.LA3:
        a, b, c = idx
        return complex(m * (m + 1) * (m + 2) * d1[a] * d1[b] * d1[c] * grad_pow)
    if kind is K.G_SCALE:
        a, b = idx
        return complex(m * d1[a] * d1[bar(b)])
    if kind is K.DG_SCALE:
        a, b, c = idx
        return complex(-2 * m * d1[a] * d1[bar(b)] * d1[c])
    if kind is K.DPSI_RATIO:
        a = idx[0]
        return complex(0.5 * (d2[a, nn] + d2[a, nb]))
    if kind is K.FINE_LA1:
        return 0j
    if kind is K.FINE_LA2:
        a, b = idx
        return complex(-(n - 1) * d1[b] * (d2[a, nn] + d2[a, nb]) + m * d2[a, b])
    if kind is K.FINE_G:
        a, b = idx
        return complex((n - 1) * d1[bar(b)] * (d2[a, nn] + d2[a, nb]) - m * d2[a, bar(b)])
    if kind is K.DET_SCALE:
        levi = d2[: n - 1, n : 2 * n - 1]
        det = np.linalg.det(levi) if levi.size else 1.0
        return complex((-1) ** (n - 1) * m**n * det)
    if kind is K.GINV_SCALE:
        return complex(1.0 / m)
    a, b, c = idx
    bb = bar(b)
    cc = c + n if c < n else c - n
    if kind is K.THIRD_LA:
        k = (n - 1) * (2 * n - 1)
        if c not in (nn, nb):
            return complex(-2 * k * d1[a] * d2[bb, c])
        if constants == "original":
            return complex(-k * d1[a] * (d2[bb, c] - d2[bb, cc]) - 2 * (2 * n - 1) * d2[a, bb])
        return complex(2 * k * (d1[a] * d2[bb, cc] - d1[c] * d2[a, bb]))
    if kind is K.DG_FINE:
        if c not in (nn, nb):
            return complex(2 * (n - 1) * d1[a] * d2[bb, c])
        if constants == "original":
            return complex((n - 1) * d1[a] * ((2 * n - 1) * d2[bb, c] + (2 * n - 3) * d2[bb, cc])
                           + 2 * ((2 * n - 1) - 2 * (n - 1) ** 2) * d2[a, bb])
        return complex(2 * (n - 1) * (d1[c] * d2[a, bb] - d1[a] * d2[bb, cc]))
    raise AssertionError(kind)


@dataclass(frozen=True)
class AsymptoticSample:
    delta: float
    scaled: complex
    target: complex
    abs_err: float
    est_order: float


@dataclass
class ConvergenceReport:
    kind: AsymptoticKind
    indices: tuple
    samples: list
    passed: bool
    exact: bool
    order: float
    tolerance: float
    extrapolated: complex
    target: complex
    message: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "indices": list(self.indices),
            "passed": self.passed,
            "exact": self.exact,
            "order": self.order,
            "tolerance": self.tolerance,
            "target": [self.target.real, self.target.imag],
            "extrapolated": [self.extrapolated.real, self.extrapolated.imag],
            "final_abs_err": self.samples[-1].abs_err,
            "message": self.message,
            **self.extra,
        }


def default_tolerance(kind) -> float:
    """Relative tolerance at the last depth: 1% up to second order, 2% for third order."""
    kind = AsymptoticKind.parse(kind)
    return 0.02 if KIND_INFO[kind].order >= 3 else 0.01


def valid_indices(kind, n: int) -> list:
    """All index tuples accepted by :func:`validate_indices` for ``kind``."""
    import itertools

    kind = AsymptoticKind.parse(kind)
    ranges = [range(n) if t == "h" else range(2 * n) for t in KIND_INFO[kind].index_types]
    out = []
    for idx in itertools.product(*ranges):
        try:
            out.append(validate_indices(kind, n, idx))
        except ValueError:
            pass
    return out


def target_scale(kind, spec: DomainSpec, q, constants: str = "original") -> float:
    """Largest limit modulus over all valid indices of ``kind`` (at least 1)."""
    vals = [abs(evaluate_limit(kind, spec, q, idx, constants)) for idx in valid_indices(kind, spec.n)]
    return max([1.0] + vals)


def convergence_report(kind, backend: RobinBackend, spec: DomainSpec, q, deltas, indices=(),
                       tolerance: float | None = None, constants: str = "original",
                       fd: FDPolicy | None = None, method: str = "auto",
                       exact_tol: float = 1e-12) -> ConvergenceReport:
    """Scaled values along the inner normal at ``q`` against the closed-form limit.

    Errors are measured relative to ``scale = max(|target|, S)`` where ``S``
    is the largest limit modulus over all indices of the kind, so that
    vanishing components are judged on the size of the whole tensor.
    Passes when the final error is within ``tolerance * scale`` and the
    errors decrease with a positive log-log order.

    With a closed-form backend the sequence is also evaluated with analytic
    derivatives; when those errors stay below ``exact_tol * scale`` at every
    depth the sequence is flagged exact and only the final-error test
    applies (the order is undefined).
    """
    kind = AsymptoticKind.parse(kind)
    idx = validate_indices(kind, spec.n, indices)
    tol = default_tolerance(kind) if tolerance is None else tolerance
    target = evaluate_limit(kind, spec, q, idx, constants)
    deltas = [float(d) for d in deltas]
    pts = normal_sequence(spec, q, deltas)
    vals = [scaled_quantity(kind, backend, spec, p, idx, fd=fd, method=method) for p in pts]
    errs = np.array([abs(v - target) for v in vals])
    scale = max(abs(target), target_scale(kind, spec, q, constants))
    if backend.closed_form and method != "auto":
        ref = [scaled_quantity(kind, backend, spec, p, idx) for p in pts]
        ref_errs = np.array([abs(v - target) for v in ref])
    else:
        ref_errs = errs
    exact = bool(np.all(ref_errs <= exact_tol * scale))
    orders = [float("nan")]
    for i in range(1, len(deltas)):
        if errs[i] > 0 and errs[i - 1] > 0:
            orders.append(float(np.log(errs[i - 1] / errs[i]) / np.log(deltas[i - 1] / deltas[i])))
        else:
            orders.append(float("nan"))
    samples = [AsymptoticSample(d, v, target, float(e), o) for d, v, e, o in zip(deltas, vals, errs, orders)]
    if len(deltas) >= 2 and np.all(errs > 0):
        order = float(np.polyfit(np.log(deltas), np.log(errs), 1)[0])
    else:
        order = float("nan")
    if len(deltas) >= 2:
        d1, d2 = deltas[-2], deltas[-1]
        extrap = complex((d1 * vals[-1] - d2 * vals[-2]) / (d1 - d2))
    else:
        extrap = complex(vals[-1])
    final_ok = bool(errs[-1] <= tol * scale)
    if exact:
        passed = final_ok
        msg = "exact at every depth" if passed else f"final error {errs[-1]:.3e} (tol {tol * scale:.3e})"
    else:
        monotone = bool(np.all(np.diff(errs) < 0))
        passed = bool(final_ok and monotone and order > 0)
        msg = "" if passed else (
            f"final error {errs[-1]:.3e} (tol {tol * scale:.3e}), monotone={monotone}, order={order:.3f}")
    extra = {}
    if kind in (AsymptoticKind.THIRD_LA, AsymptoticKind.DG_FINE) and idx[2] in (spec.n - 1, 2 * spec.n - 1):
        alt = "corrected" if constants == "original" else "original"
        other = evaluate_limit(kind, spec, q, idx, alt)
        extra = {
            "constants": constants,
            f"target_{alt}": [other.real, other.imag],
            "fitted_disagrees": bool(abs(extrap - target) > 0.02 * scale),
        }
    extra["scale"] = scale
    return ConvergenceReport(kind, idx, samples, passed, exact, order, tol, extrap, target, msg, extra)
