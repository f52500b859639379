"""Geodesics of the Robin metric and the second derivative of psi along them.

The geodesic equation in complex coordinates reads
``p''_a = -sum_{j,k} Gamma[a, j, k] v_j v_k`` with
``Gamma[a, j, k] = sum_b dg[j, k, b] g_inv[b, a]``.  It is integrated as a
real first-order system in ``(Re p, Im p, Re v, Im v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .domains import DomainError, DomainSpec, radial_boundary
from .metric import MetricData, metric_data
from .robin import MfsRobin, RobinBackend, robin_derivatives


@dataclass(frozen=True)
class GeodesicState:
    p: np.ndarray
    v: np.ndarray
    t: float = 0.0


class MetricField:
    """Metric data as a function of position, from one Robin backend."""

    def __init__(self, backend: RobinBackend, spec: DomainSpec, min_distance: float | None = None):
        if not getattr(spec, "bounded", True):
            raise DomainError("degenerate metric on the half-space model; geodesics refused")
        self.backend = backend
        self.spec = spec
        if min_distance is None:
            min_distance = backend.band_floor if isinstance(backend, MfsRobin) else 1e-8
        self.min_distance = min_distance

    def __call__(self, p) -> MetricData:
        re = robin_derivatives(self.backend, self.spec, p, 3)
        return metric_data(re, strict=True)

    def distance(self, p) -> float:
        return self.backend.distance(p)


def geodesic_rhs(state: GeodesicState, field: MetricField) -> np.ndarray:
    """Complex acceleration ``p''`` at ``state``."""
    md = field(state.p)
    return -np.einsum("ajk,j,k->a", md.christoffel(), state.v, state.v)


def _pack(p, v):
    return np.concatenate([p.real, p.imag, v.real, v.imag])


def _unpack(y, n):
    return y[:n] + 1j * y[n:2 * n], y[2 * n:3 * n] + 1j * y[3 * n:]


@dataclass
class Trajectory:
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    psi: np.ndarray
    exited: bool = False
    message: str = ""

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        if e0 == 0:
            return float(np.max(np.abs(self.energy)))
        return float(np.max(np.abs(self.energy - e0)) / abs(e0))


def integrate(state: GeodesicState, field: MetricField, T: float, rtol: float = 1e-10,
              atol: float = 1e-10, t_eval=None, max_step: float = np.inf) -> Trajectory:
    """Integrate the geodesic from ``state`` over ``[t, t + T]`` (``T`` may be negative).

    Integration stops early, with ``exited`` set, when the path comes within
    ``field.min_distance`` of the boundary.
    """
    p0 = np.asarray(state.p, complex)
    v0 = np.asarray(state.v, complex)
    n = p0.size
    t0 = float(state.t)

    def rhs(t, y):
        p, v = _unpack(y, n)
        a = geodesic_rhs(GeodesicState(p, v, t), field)
        return np.concatenate([v.real, v.imag, a.real, a.imag])

    def leave(t, y):
        p, _ = _unpack(y, n)
        return field.distance(p) - field.min_distance

    leave.terminal = True
    leave.direction = -1
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (t0, t0 + T), _pack(p0, v0), method="RK45", rtol=rtol, atol=atol,
                    events=leave, t_eval=t_eval, max_step=max_step)
    if sol.status < 0:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    P = (sol.y[:n] + 1j * sol.y[n:2 * n]).T
    V = (sol.y[2 * n:3 * n] + 1j * sol.y[3 * n:]).T
    energy = np.array([field(p).energy(v) for p, v in zip(P, V)])
    psi = field.spec.psi(P)
    exited = sol.status == 1
    return Trajectory(sol.t, P, V, energy, psi, exited, "left trusted region" if exited else "")


def psi_first_derivative(spec: DomainSpec, state: GeodesicState) -> float:
    """``(psi o gamma)'(0) = 2 Re sum psi_a v_a``."""
    return float(2.0 * np.real(spec.eval(state.p, 1).grad @ state.v))


def psi_second_derivative(spec: DomainSpec, state: GeodesicState, field: MetricField,
                          md: MetricData | None = None) -> float:
    """``(psi o gamma)''`` from the geodesic equation.

    ``-2 Re sum psi_a Gamma[a,j,k] v_j v_k + 2 Re sum psi_{ab} v_a v_b
    + 2 sum psi_{a bbar} v_a conj(v_b)``.
    """
    v = np.asarray(state.v, complex)
    md = field(state.p) if md is None else md
    ev = spec.eval(state.p, 2)
    contraction = np.einsum("ajk,j,k->a", md.christoffel(), v, v)
    levi = np.real(v @ ev.hess_mixed @ v.conj())
    return float(-2.0 * np.real(ev.grad @ contraction)
                 + 2.0 * np.real(v @ ev.hess_holo @ v) + 2.0 * levi)


def psi_second_difference(spec: DomainSpec, state: GeodesicState, field: MetricField,
                          h: float = 1e-2, rtol: float = 1e-12, atol: float = 1e-12) -> float:
    """Fourth-order central second difference of ``psi`` along the integrated geodesic."""
    vals = {}
    for k in (-2, -1, 1, 2):
        tr = integrate(state, field, k * h, rtol=rtol, atol=atol)
        if tr.exited:
            raise RuntimeError("geodesic left the trusted region during the difference stencil")
        vals[k] = tr.psi[-1]
    vals[0] = float(spec.psi(np.asarray(state.p, complex)))
    return float((-vals[2] + 16 * vals[1] - 30 * vals[0] + 16 * vals[-1] - vals[-2]) / (12 * h**2))


def tangential_launch(spec: DomainSpec, q, delta: float, u, band_floor: float = 0.0,
                      complex_tangent: bool = False) -> GeodesicState:
    """Start at depth ``delta`` below ``q`` along the inner normal with a tangential unit velocity.

    By default ``u`` is projected onto the real tangent space
    ``Re sum psi_a u_a = 0``, so ``(psi o gamma)'(0) = 0``.  With
    ``complex_tangent`` the whole complex normal part is removed
    (``sum psi_a u_a = 0``), which is the setting of the near-boundary limit
    ``(psi o gamma)''(0) -> 2 L_psi(u, u)``.
    """
    if delta <= 0 or delta < band_floor:
        raise DomainError(f"launch depth {delta} outside the trusted band")
    q = spec._check_point(q)
    p = q - delta * spec.outward_normal(q)
    if spec.psi(p) >= 0:
        raise DomainError("launch point is not interior")
    g = spec.eval(p, 1).grad
    u = np.asarray(u, dtype=complex)
    comp = u @ g if complex_tangent else np.real(u @ g)
    u = u - comp / np.vdot(g, g).real * g.conj()
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise DomainError("direction has no tangential component")
    return GeodesicState(p, u / nrm, 0.0)


@dataclass
class BandRecord:
    boundary_point: np.ndarray
    direction: np.ndarray
    delta: float
    first: float
    second: float
    low_confidence: bool = False


@dataclass
class BandScanReport:
    epsilon_grid: list
    records: list = field(default_factory=list)
    certified_epsilon: float | None = None
    epsilon1: float | None = None
    skipped: list = field(default_factory=list)

    @property
    def negatives(self) -> list:
        return [r for r in self.records if r.second <= 0]

    def summary(self) -> dict:
        sec = np.array([r.second for r in self.records]) if self.records else np.array([np.nan])
        first = np.array([abs(r.first) for r in self.records]) if self.records else np.array([np.nan])
        return {
            "epsilon_grid": list(self.epsilon_grid),
            "launches": len(self.records),
            "negative_samples": len(self.negatives),
            "min_second_derivative": float(np.min(sec)),
            "max_abs_first_derivative": float(np.max(first)),
            "certified_epsilon": self.certified_epsilon,
            "epsilon1": self.epsilon1,
            "skipped": len(self.skipped),
            "low_confidence": sum(r.low_confidence for r in self.records),
        }


def band_scan(spec: DomainSpec, backend: RobinBackend, epsilon_grid, directions: int = 4,
              boundary_samples: int = 32, seed: int = 0, p0=None) -> BandScanReport:
    """Tangential launches at every depth of ``epsilon_grid`` from sampled boundary points.

    ``certified_epsilon`` is the largest grid value whose launches at all
    depths up to it have ``(psi o gamma)''(0) > 0``.  Launches whose MFS
    solve misses the boundary data by more than the backend tolerance are
    counted as ``low_confidence`` in the summary.  With an interior
    point ``p0`` the report also carries ``epsilon1 = min(eps, -psi(p0)) / 2``.
    """
    grid = sorted(float(e) for e in epsilon_grid)
    if not grid or grid[0] <= 0:
        raise ValueError("epsilon grid must be positive")
    field_ = MetricField(backend, spec)
    floor = backend.band_floor if isinstance(backend, MfsRobin) else 0.0
    rng = np.random.default_rng(seed)
    n = spec.n
    dirs = rng.standard_normal((boundary_samples, n)) + 1j * rng.standard_normal((boundary_samples, n))
    qs = radial_boundary(spec, dirs)
    report = BandScanReport(grid)
    for q in qs:
        for _ in range(directions):
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            for delta in grid:
                try:
                    st = tangential_launch(spec, q, delta, u, floor)
                except DomainError as exc:
                    report.skipped.append((q, delta, str(exc)))
                    continue
                re = robin_derivatives(backend, spec, st.p, 3)
                md = metric_data(re, strict=True)
                report.records.append(BandRecord(q, st.v, delta, psi_first_derivative(spec, st),
                                                 psi_second_derivative(spec, st, field_, md),
                                                 re.low_confidence))
    certified = None
    for eps in grid:
        if all(r.second > 0 for r in report.records if r.delta <= eps):
            certified = eps
        else:
            break
    report.certified_epsilon = certified
    if p0 is not None and certified is not None:
        report.epsilon1 = 0.5 * min(certified, -float(spec.psi(np.asarray(p0, complex))))
    return report


@dataclass
class EscapeVerdict:
    passed: bool
    maxima: list
    band_maxima: list
    epsilon1: float

    def to_dict(self) -> dict:
        return {"passed": self.passed, "epsilon1": self.epsilon1,
                "maxima": [{"t": t, "psi": s} for t, s in self.maxima],
                "band_maxima": [{"t": t, "psi": s} for t, s in self.band_maxima]}


def escape_certificate(spec: DomainSpec, trajectory: Trajectory, epsilon1: float) -> EscapeVerdict:
    """Locate interior local maxima of ``psi`` along a trajectory.

    A maximum inside the band ``{psi > -epsilon1}`` would have a
    non-positive second derivative at a tangential point, which the band
    scan rules out; finding one fails the verdict.
    """
    s = np.asarray(trajectory.psi, dtype=float)
    maxima = []
    for i in range(1, s.size - 1):
        if s[i] > s[i - 1] and s[i] >= s[i + 1]:
            maxima.append((float(trajectory.t[i]), float(s[i])))
    band = [(t, v) for t, v in maxima if v > -epsilon1]
    return EscapeVerdict(not band, maxima, band, float(epsilon1))
