"""Executable acceptance criteria.

Each ``_c<k>`` function runs one criterion at its stated tolerance
and returns a :class:`CriterionResult`.  :func:`run_all` runs the suite in
order; the CLI ``full-report`` command and ``tests/test_acceptance.py`` are
thin wrappers around it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .asymptotics import convergence_report, normal_sequence, scaled_quantity, evaluate_limit
from .domains import (ball, custom_polynomial, ellipsoid, normalize_dagger, sphere_points,
                      strong_pseudoconvexity_check)
from .geodesics import (GeodesicState, MetricField, band_scan, integrate, psi_second_derivative,
                        psi_second_difference, tangential_launch)
from .metric import affine_pullback_deviation, metric_tensor
from .moments import (MOMENT_KINDS, MomentKind, lambda_a_closed_form, lambda_a_quadrature,
                      mixed_second_derivative_closed_form, mixed_second_derivative_quadrature,
                      moment_exact, moment_mc)
from .robin import MFS_ACCURATE, BallRobin, RobinEval, identity_residuals, make_backend, robin_derivatives

EXPECTED_MOMENTS = {
    MomentKind.X_CONST: lambda n: Fraction(2),
    MomentKind.A_CONST: lambda n: Fraction(1, 2 * n),
    MomentKind.B_CONST: lambda n: Fraction(2 * (2 * n + 1), n),
    MomentKind.ZETA_N_4N: lambda n: Fraction(1),
    MomentKind.ABS_ZN_SQ: lambda n: Fraction(n + 1, n),
    MomentKind.ZBAR_SQ: lambda n: Fraction(1),
    MomentKind.TANGENT_SQ: lambda n: Fraction(1, n),
    MomentKind.MIXED_ZERO: lambda n: Fraction(0),
}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:>2} [{tag}] {self.title} ({self.seconds:.1f} s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "details": self.details}


def _timed(number: int, title: str, fn, *args, **kwargs) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, details = fn(*args, **kwargs)
    except Exception as exc:  # a crash is a failure with diagnostics, not an abort of the suite
        passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CriterionResult(number, title, bool(passed), details, time.perf_counter() - t0)


def normalized_ball(n: int):
    """The unit ball moved so that e_n sits at 0 with d psi(0) = e_n; psi = |w|^2 + 2 Re w_n."""
    q = np.zeros(n, complex)
    q[-1] = 1.0
    return normalize_dagger(ball(n, 1.0), q)[1]


def sample_hessian(n: int) -> np.ndarray:
    """Combined second-derivative matrix at 0 of a fixed normalized defining function.

    ``psi = |w|^2 + 2 Re w_n + 2 Re(sum_{j<=k} c_jk w_j w_k) + 2 Re(sum_{j<k} d_jk w_j conj(w_k))``
    with distinct coefficients of order one, so that no entry the quadratures probe is
    small next to the others (their Monte Carlo noise is shared).
    """
    terms = []
    e = np.eye(n, dtype=int)
    z = np.zeros(n, dtype=int)
    for j in range(n):
        terms.append((1.0, e[j], e[j]))
    terms += [(1.0, e[-1], z), (1.0, z, e[-1])]
    for j in range(n):
        for k in range(j, n):
            c = 0.6 + 0.4j + 0.1 * j - 0.15 * k
            terms += [(c, e[j] + e[k], z), (np.conj(c), z, e[j] + e[k])]
            if k > j:
                d = 0.5 - 0.4j + 0.1 * j + 0.05 * k
                terms += [(d, e[j], e[k]), (np.conj(d), e[k], e[j])]
    spec = custom_polynomial(n, terms)
    return spec.eval(np.zeros(n, complex), 2).d2


def _tangential(n: int):
    return [a for a in range(2 * n) if a not in (n - 1, 2 * n - 1)]


# ---------------------------------------------------------------------------


def _c1(samples=1_000_000, seed=1, dims=(2, 3, 4), time_limit=30.0):
    rows, ok = [], True
    for n in dims:
        for kind in MOMENT_KINDS:
            ex = moment_exact(kind, n)
            exact_ok = ex.pi_power == 0 and ex.rational == EXPECTED_MOMENTS[kind](n)
            t0 = time.perf_counter()
            est = moment_mc(kind, n, samples, seed)
            dt = time.perf_counter() - t0
            z = est.z_score(float(ex))
            good = exact_ok and z <= 4.0 and dt < time_limit
            ok &= good
            rows.append({"n": n, "kind": kind.value, "exact": str(ex), "mc": est.value.real,
                         "stderr": est.stderr, "z": z, "seconds": dt, "passed": good})
    return ok, {"rows": rows}


def _c2(samples=1_000_000, seed=2, dims=(2, 3), tol=0.02):
    rows, ok = [], True
    for n in dims:
        H = sample_hessian(n)
        for a in _tangential(n):
            exact = lambda_a_closed_form(H, n, a)
            est = lambda_a_quadrature(H, n, a, samples, seed)
            rel = abs(est.value - exact) / abs(exact)
            ok &= rel <= tol
            rows.append({"n": n, "a": a, "closed_form": [exact.real, exact.imag],
                         "quadrature": [est.value.real, est.value.imag], "rel_err": rel})
    return ok, {"rows": rows}


def _c3(samples=1_000_000, seed=3, dims=(2, 3), tol=0.02):
    rows, ok = [], True
    for n in dims:
        H = sample_hessian(n)
        for beta in range(n - 1):
            for c in range(2 * n):
                exact = mixed_second_derivative_closed_form(H, n, c, beta, "original")
                est = mixed_second_derivative_quadrature(H, n, c, beta, samples, seed, "verbatim")
                rel = abs(est.value - exact) / abs(exact)
                ok &= rel <= tol
                alt = mixed_second_derivative_quadrature(H, n, c, beta, samples, seed, "corrected")
                alt_exact = mixed_second_derivative_closed_form(H, n, c, beta, "corrected")
                rows.append({"n": n, "c": c, "beta": beta, "closed_form": [exact.real, exact.imag],
                             "quadrature": [est.value.real, est.value.imag], "rel_err": rel,
                             "corrected_rel_err": abs(alt.value - alt_exact) / abs(alt_exact)})
    return ok, {"rows": rows}


def criterion4_grid(n: int = 2, count: int = 25, radius: float = 0.6) -> np.ndarray:
    """Origin plus points on four shells up to ``radius`` (deterministic)."""
    shells = np.linspace(radius / 4, radius, 4)
    per = (count - 1) // 4
    dirs = sphere_points(per, n, seed=5)
    pts = [np.zeros(n, complex)] + [r * d for r in shells for d in dirs]
    return np.array(pts[:count])


def _c4(n=2, tol=1e-5, time_limit=120.0):
    spec = ball(n, 1.0)
    t0 = time.perf_counter()
    mfs = make_backend("mfs", spec, **MFS_ACCURATE)
    exact = BallRobin.from_spec(spec)
    P = criterion4_grid(n)
    rel = np.abs(mfs.value(P) / exact.value(P) - 1.0)
    dt = time.perf_counter() - t0
    return bool(rel.max() <= tol and dt < time_limit), {"max_rel_err": float(rel.max()), "points": len(P),
                                                        "seconds": dt}


def _c5(dims=(2, 3), deltas=(0.3, 0.1, 0.01, 1e-4), tol=1e-12):
    rows, ok = [], True
    for n in dims:
        spec = normalized_ball(n)
        be = BallRobin.from_spec(spec)
        q = np.zeros(n, complex)
        checks = [("LA0", ()), ("G_SCALE", (n - 1, n - 1)), ("DET_SCALE", ()), ("GINV_SCALE", (n - 1,))]
        for kind, idx in checks:
            target = evaluate_limit(kind, spec, q, idx)
            for d, p in zip(deltas, normal_sequence(spec, q, deltas)):
                val = scaled_quantity(kind, be, spec, p, idx)
                rel = abs(val - target) / abs(target)
                ok &= rel <= tol
                rows.append({"n": n, "kind": kind, "delta": d, "value": val.real, "target": target.real,
                             "rel_err": rel})
    return ok, {"rows": rows}


CRITERION6_KINDS = ("LA1", "LA2", "LA3", "DG_SCALE", "FINE_LA1", "FINE_LA2", "FINE_G", "THIRD_LA", "DG_FINE")


def _c6(n=2, deltas=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), tol=0.02, time_limit=60.0):
    from .asymptotics import valid_indices

    spec = normalized_ball(n)
    be = BallRobin.from_spec(spec)
    q = np.zeros(n, complex)
    t0 = time.perf_counter()
    rows, ok = [], True
    for kind in CRITERION6_KINDS:
        for idx in valid_indices(kind, n):
            r = convergence_report(kind, be, spec, q, deltas, idx, tolerance=tol, method="fd")
            ok &= r.passed
            rows.append({"kind": kind, "indices": list(idx), "passed": r.passed, "exact": r.exact,
                         "order": r.order, "final_abs_err": r.samples[-1].abs_err, "scale": r.extra["scale"]})
    dt = time.perf_counter() - t0
    return bool(ok and dt < time_limit), {"reports": len(rows), "failed": [r for r in rows if not r["passed"]],
                                          "seconds": dt, "rows": rows}


def _c7(deltas=(0.2, 0.1, 0.05), tol=0.05):
    spec = ellipsoid([2.0, 1.0])
    q = np.array([0.0, 1.0], complex)
    be = make_backend("mfs", spec, focus=q, focus_depth=min(deltas))
    r = convergence_report("G_SCALE", be, spec, q, list(deltas), (1, 1), tolerance=tol)
    return r.passed, r.to_dict() | {"samples": [
        {"delta": s.delta, "scaled": s.scaled.real, "abs_err": s.abs_err} for s in r.samples]}


def _c8(launches=100, seed=8, drift_tol=1e-8, lemma_tol=1e-4, radial_tol=1e-9):
    n = 2
    spec = ball(n, 1.0)
    field_ = MetricField(BallRobin.from_spec(spec), spec)
    rng = np.random.default_rng(seed)
    # energy drift on a long geodesic
    st = GeodesicState(np.array([0.3, 0.1j]), np.array([0.2 + 0.1j, -0.1 + 0.3j]))
    T = 5.0
    tr = integrate(st, field_, T, rtol=1e-11, atol=1e-11)
    drift = tr.energy_drift() / (tr.t[-1] - tr.t[0])
    # formula vs second difference along the integrated path
    worst = 0.0
    for _ in range(launches):
        p = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        p *= rng.uniform(0.0, 0.7) / np.linalg.norm(p)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        s = GeodesicState(p, v)
        a = psi_second_derivative(spec, s, field_)
        b = psi_second_difference(spec, s, field_)
        worst = max(worst, abs(a - b) / abs(a))
    # a geodesic through the center along a real line stays on that line
    v = np.array([0.6, 0.8j])
    tr2 = integrate(GeodesicState(np.zeros(n, complex), v), field_, 2.0, rtol=1e-11, atol=1e-12)
    line = np.outer(np.real(tr2.p @ v.conj()), v)
    radial = float(np.max(np.abs(tr2.p - line)))
    ok = drift <= drift_tol and worst <= lemma_tol and radial <= radial_tol
    return ok, {"energy_drift_per_time": drift, "lemma_max_rel_err": worst, "radial_deviation": radial,
                "exited": bool(tr.exited or tr2.exited)}


def _c9(n=2, delta=1e-3, tol=0.05, launches=1000, seed=9, time_limit=120.0):
    spec = normalized_ball(n)
    be = BallRobin.from_spec(spec)
    field_ = MetricField(be, spec)
    q = np.zeros(n, complex)
    rng = np.random.default_rng(seed)
    ratios, worst = [], 0.0
    for _ in range(16):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        st = tangential_launch(spec, q, delta, u, complex_tangent=True)
        ratios.append(psi_second_derivative(spec, st, field_) / np.vdot(st.v, st.v).real)
        # the limit is twice the Levi form at q in the launch direction
        target = 2.0 * np.real(st.v @ spec.eval(q, 2).hess_mixed @ st.v.conj())
        worst = max(worst, abs(ratios[-1] - target) / target)
    t0 = time.perf_counter()
    grid = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
    directions = 4
    samples = int(np.ceil(launches / (directions * len(grid))))
    rep = band_scan(spec, be, grid, directions=directions, boundary_samples=samples, seed=seed,
                    p0=np.array([0.0] * (n - 1) + [-1.0], complex))
    dt = time.perf_counter() - t0
    summ = rep.summary()
    ok = (worst <= tol and rep.certified_epsilon is not None and not rep.negatives
          and summ["launches"] >= launches and dt < time_limit)
    return ok, {"max_rel_err": worst, "target": target, "band_scan": summ, "band_seconds": dt}


def _c10(seed=10, pullback_mfs_tol=1e-4):
    details, ok = {}, True
    rng = np.random.default_rng(seed)
    n = 2
    spec = ellipsoid([2.0, 1.0])
    pc = strong_pseudoconvexity_check(spec, 256, seed)
    details["pseudoconvexity_min"] = pc.min_eigenvalue
    ok &= pc.passed
    # closed-form ball: PSH, symmetries, pullback, identities
    bspec = ball(n, 1.0)
    be = BallRobin.from_spec(bspec)
    pts = [0.6 * rng.uniform() ** 0.5 * x / np.linalg.norm(x)
           for x in rng.standard_normal((20, n)) + 1j * rng.standard_normal((20, n))]
    min_eig, herm, conj_sym, id1, id2 = np.inf, 0.0, 0.0, 0.0, 0.0
    for p in pts:
        re = robin_derivatives(be, bspec, p, 3)
        raw = re.d2[:n, n:] / re.lambda_big - np.outer(re.d1[:n], re.d1[n:]) / re.lambda_big**2
        herm = max(herm, float(np.max(np.abs(raw - raw.conj().T)) / np.max(np.abs(raw))))
        d2 = re.d2
        conj_sym = max(conj_sym, float(np.max(np.abs(d2[n:, n:] - d2[:n, :n].conj()))
                                       / np.max(np.abs(d2))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(metric_tensor(re)).min()))
        r1, r2 = identity_residuals(be, bspec, p)
        id1, id2 = max(id1, r1), max(id2, r2)
    U = np.array([[np.cos(0.4), 1j * np.sin(0.4)], [1j * np.sin(0.4), np.cos(0.4)]]) * np.exp(0.3j)
    shift = np.array([0.2 - 0.1j, 0.05j])
    # image ball: center U(0 - shift) after w = U(z - shift)
    img = BallRobin(-(U @ shift), 1.0)
    pull_exact = 0.0
    for p in pts:
        g0 = metric_tensor(robin_derivatives(be, bspec, p, 2))
        w = U @ (p - shift)
        F0, d1, d2, _ = img.analytic(w, 2)
        g1 = metric_tensor(RobinEval(w, float(F0), d1, d2, None, 0.0, "ball"))
        pull_exact = max(pull_exact, affine_pullback_deviation(g0, g1, U))
    details.update({"psh_min_eigenvalue": min_eig, "hermitian_residual": herm,
                    "conjugation_residual": conj_sym, "identity_La_a": id1, "identity_La_ab": id2,
                    "pullback_closed_form": pull_exact})
    ok &= min_eig > 0 and herm <= 1e-10 and conj_sym <= 1e-10 and id1 <= 1e-6 and id2 <= 1e-6
    ok &= pull_exact <= 1e-10
    # MFS pullback: the ellipsoid and its rotated, translated copy, solved independently
    nmap, img_spec = _rigid_image(spec, U, shift)
    m0 = make_backend("mfs", spec)
    m1 = make_backend("mfs", img_spec)
    pull_mfs = 0.0
    for p in [np.array([0.1, 0.2j]), np.array([-0.2 + 0.1j, 0.1]), np.array([0.15j, -0.3])]:
        g0 = metric_tensor(robin_derivatives(m0, spec, p, 2))
        g1 = metric_tensor(robin_derivatives(m1, img_spec, nmap(p), 2))
        pull_mfs = max(pull_mfs, affine_pullback_deviation(g0, g1, U))
    details["pullback_mfs"] = pull_mfs
    ok &= pull_mfs <= pullback_mfs_tol
    return bool(ok), details


def _rigid_image(spec, U, shift):
    """Image of ``spec`` under ``w = U (z - shift)`` with U unitary."""
    from .domains import AffineSpec

    img = AffineSpec(spec, shift, U.conj().T, 1.0)
    return (lambda z: U @ (np.asarray(z, complex) - shift)), img


CRITERIA = (
    (1, "moment integrals exact and Monte Carlo", _c1),
    (2, "lambda_a quadrature vs closed form", _c2),
    (3, "mixed second-derivative quadrature vs Case I/II constants", _c3),
    (4, "MFS Robin function vs ball closed form", _c4),
    (5, "exact ball identities", _c5),
    (6, "corollary limits on the normalized ball", _c6),
    (7, "MFS asymptotics on Ellipsoid(2,1)", _c7),
    (8, "geodesic energy, second-derivative formula, radial invariance", _c8),
    (9, "tangential limit and band scan", _c9),
    (10, "property suites", _c10),
)


def run_criterion(number: int, **kwargs) -> CriterionResult:
    for k, title, fn in CRITERIA:
        if k == number:
            return _timed(k, title, fn, **kwargs)
    raise ValueError(f"no criterion {number}")


def run_all(numbers=None, echo=None) -> list:
    """Run the selected criteria (all by default); ``echo`` receives each result line."""
    out = []
    for k, title, fn in CRITERIA:
        if numbers is not None and k not in numbers:
            continue
        res = _timed(k, title, fn)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
