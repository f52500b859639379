"""Command-line entry point: ``robinmetric <subcommand> [options]``.

Domain files are TOML or JSON holding either a top-level ``{kind, n, params}``
table or a ``[domain]`` table; an optional ``[run]`` table supplies defaults
for ``backend``, ``seed``, ``out`` and ``tolerance``.  Command-line options
override the file.  Exit codes: 0 success, 1 numerical failure or a failed
check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from . import acceptance
from .asymptotics import AsymptoticKind, convergence_report
from .domains import DomainError, ProjectionError, spec_from_dict, strong_pseudoconvexity_check
from .geodesics import GeodesicState, MetricField, band_scan, escape_certificate, integrate
from .metric import MetricError, kahler_symmetry_residual, metric_data
from .moments import MOMENT_KINDS, moment_exact, moment_mc
from .robin import RobinError, make_backend, robin_derivatives
from .wirtinger import parse_index


class ConfigError(ValueError):
    """Bad command-line or configuration input (exit code 2)."""


def load_schema() -> dict:
    return json.loads(resources.files("robinmetric").joinpath("schema.json").read_text())


SCHEMA = load_schema()
SCHEMA_VERSION = SCHEMA["schema_version"]


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    """Full-precision decimal for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


_VOLATILE = {"seconds", "band_seconds"}


def _strip_volatile(obj):
    """Drop wall-clock timings so that reports are byte-identical across runs."""
    if isinstance(obj, dict):
        return {k: _strip_volatile(v) for k, v in obj.items() if k not in _VOLATILE}
    if isinstance(obj, list):
        return [_strip_volatile(v) for v in obj]
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def render_json(command: str, config: dict, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command,
           "config_hash": config_hash(config), "config": config}
    doc.update(payload)
    return json.dumps(_strip_volatile(_jsonable(doc)), indent=2, sort_keys=False) + "\n"


def render_csv(config: dict, header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION} config_hash={config_hash(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def expand_columns(command: str, n: int) -> list:
    cols = []
    vec = set(SCHEMA["csv_vector_columns"].get(command, []))
    for c in SCHEMA["csv"][command]:
        cols += [f"{c}{j + 1}" for j in range(n)] if c in vec else [c]
    return cols


class Output:
    """Writes artifacts to ``out`` (a directory) or to stdout/stderr."""

    def __init__(self, out: str | None, command: str):
        self.dir = Path(out) if out else None
        self.command = command
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def emit(self, text: str, suffix: str, primary: bool = True):
        if self.dir is not None:
            (self.dir / f"{self.command}.{suffix}").write_text(text)
        elif primary:
            sys.stdout.write(text)
        else:
            sys.stderr.write(text)


# ---------------------------------------------------------------------------
# parsing


def parse_complex_vector(text: str) -> np.ndarray:
    try:
        return np.array([complex(t.strip().replace("i", "j")) for t in str(text).split(",")], dtype=complex)
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex vector {text!r}") from exc


def parse_float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def parse_count(text) -> int:
    try:
        v = float(text)
    except ValueError as exc:
        raise ConfigError(f"not a count: {text!r}") from exc
    if v != int(v) or v < 1:
        raise ConfigError(f"not a positive integer count: {text!r}")
    return int(v)


def read_table(path: str) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            return json.loads(raw.decode())
        return tomli.loads(raw.decode())
    except (tomli.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed configuration {path}: {exc}") from exc


def load_domain(path: str | None, n: int | None = None):
    """``(spec, domain_table, run_table)`` from a domain file; ``n`` fills a missing dimension."""
    if path is None:
        raise ConfigError("--domain is required")
    doc = read_table(path)
    table = dict(doc.get("domain", doc))
    run = dict(doc.get("run", {}))
    table.pop("run", None)
    if n is not None:
        if table.get("n") is not None and int(table["n"]) != n:
            raise ConfigError(f"--n {n} contradicts n = {table['n']} in {path}")
        table["n"] = n
    try:
        spec = spec_from_dict(table)
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return spec, table, run


def _pick(args, run: dict, name: str, default=None):
    val = getattr(args, name, None)
    if val is not None:
        return val
    return run.get(name, default)


def _backend(kind: str, spec, args, focus=None, focus_depth=None):
    opts = {}
    if kind == "mfs":
        opts = {"seed": int(args.seed)}
        if args.mfs_m:
            opts["M"] = args.mfs_m
        if args.mfs_n:
            opts["N"] = args.mfs_n
        if focus is not None:
            opts.update(focus=focus, focus_depth=focus_depth)
    try:
        return make_backend(kind, spec, **opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _base_config(args, table=None, run=None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "threads")}
    if table is not None:
        cfg["domain_table"] = table
    if run:
        cfg["run"] = run
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_domain_check(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = seed = int(_pick(args, run, "seed", 0))
    if not spec.bounded:
        rep = None
        passed = True
    else:
        rep = strong_pseudoconvexity_check(spec, args.samples, seed)
        passed = rep.passed
    payload = {
        "domain": spec.to_dict(),
        "bounded": bool(spec.bounded),
        "pseudoconvexity": None if rep is None else {
            "min_eigenvalue": rep.min_eigenvalue, "passed": rep.passed, "samples": rep.samples,
            "failures": [list(f) for f in rep.failures]},
    }
    text = render_json("domain-check", _base_config(args, table, run), payload)
    Output(_pick(args, run, "out"), "domain-check").emit(text, "json")
    return 0 if passed else 1


def cmd_halfspace_verify(args) -> int:
    samples = parse_count(args.samples)
    args.seed = 0 if args.seed is None else args.seed
    cfg = _base_config(args)
    rows, ok = [], True
    for kind in MOMENT_KINDS:
        ex = moment_exact(kind, args.n)
        est = moment_mc(kind, args.n, samples, args.seed)
        z = est.z_score(float(ex))
        good = z <= args.z_max
        ok &= good
        rows.append([kind.value, args.n, float(ex), est.value.real, est.stderr, z, good])
    out = Output(args.out, "halfspace-verify")  # no domain file, so no [run] table
    out.emit(render_csv(cfg, SCHEMA["csv"]["halfspace-verify"], rows), "csv")
    out.emit(render_json("halfspace-verify", cfg, {"passed": ok}), "json", primary=False)
    return 0 if ok else 1


def cmd_robin(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    kind = _pick(args, run, "backend", "ball")
    p = parse_complex_vector(args.point)
    be = _backend(kind, spec, args)
    re = robin_derivatives(be, spec, p, args.order)
    text = render_json("robin", _base_config(args, table, run), {"robin": re.to_dict()})
    Output(_pick(args, run, "out"), "robin").emit(text, "json")
    return 1 if re.low_confidence else 0


def cmd_metric(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    kind = _pick(args, run, "backend", "ball")
    p = parse_complex_vector(args.point)
    be = _backend(kind, spec, args)
    re = robin_derivatives(be, spec, p, 3)
    md = metric_data(re)
    payload = {"metric": md.to_dict(), "kahler_symmetry_residual": kahler_symmetry_residual(md.dg)}
    text = render_json("metric", _base_config(args, table, run), payload)
    Output(_pick(args, run, "out"), "metric").emit(text, "json")
    return 0 if md.positive_definite else 1


def cmd_geodesic(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    kind = _pick(args, run, "backend", "ball")
    p = parse_complex_vector(args.point)
    v = parse_complex_vector(args.velocity)
    if p.size != spec.n or v.size != spec.n:
        raise ConfigError("point and velocity must have n entries")
    be = _backend(kind, spec, args)
    field_ = MetricField(be, spec)
    t_eval = np.linspace(0.0, args.T, args.samples) if args.samples and args.samples > 1 else None
    tr = integrate(GeodesicState(p, v), field_, args.T, rtol=args.rtol, atol=args.atol, t_eval=t_eval)
    cfg = _base_config(args, table, run)
    rows = [[t, *pp.real, *pp.imag, *vv.real, *vv.imag, e, s]
            for t, pp, vv, e, s in zip(tr.t, tr.p, tr.v, tr.energy, tr.psi)]
    verdict = escape_certificate(spec, tr, args.epsilon1) if args.epsilon1 else None
    out = Output(_pick(args, run, "out"), "geodesic")
    out.emit(render_csv(cfg, expand_columns("geodesic", spec.n), rows), "csv")
    payload = {"energy_drift": tr.energy_drift(), "exited": tr.exited,
               "escape": None if verdict is None else verdict.to_dict()}
    out.emit(render_json("geodesic", cfg, payload), "json", primary=False)
    return 0 if verdict is None or verdict.passed else 1


def cmd_band_scan(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    kind = _pick(args, run, "backend", "ball")
    be = _backend(kind, spec, args)
    p0 = parse_complex_vector(args.p0) if args.p0 else None
    rep = band_scan(spec, be, parse_float_list(args.eps), directions=args.directions,
                    boundary_samples=args.boundary_samples, seed=args.seed, p0=p0)
    cfg = _base_config(args, table, run)
    rows = [[*r.boundary_point.real, *r.boundary_point.imag, *r.direction.real, *r.direction.imag,
             r.delta, r.first, r.second] for r in rep.records]
    out = Output(_pick(args, run, "out"), "band-scan")
    out.emit(render_csv(cfg, expand_columns("band-scan", spec.n), rows), "csv")
    out.emit(render_json("band-scan", cfg, {"summary": rep.summary()}), "json", primary=False)
    return 0 if rep.certified_epsilon is not None else 1


def cmd_asymptotics(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    kind_name = _pick(args, run, "backend", "ball")
    try:
        kind = AsymptoticKind.parse(args.kind)
        idx = tuple(parse_index(t.strip(), spec.n) for t in args.indices.split(",")) if args.indices else ()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    q = parse_complex_vector(args.point) if args.point else np.zeros(spec.n, complex)
    deltas = parse_float_list(args.deltas)
    be = _backend(kind_name, spec, args, focus=q, focus_depth=min(deltas))
    tol = _pick(args, run, "tolerance", None)
    try:
        rep = convergence_report(kind, be, spec, q, deltas, idx, tolerance=tol, constants=args.constants,
                                 method=args.method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = _base_config(args, table, run)
    rows = [[s.delta, s.scaled.real, s.scaled.imag, s.target.real, s.target.imag, s.abs_err, s.est_order]
            for s in rep.samples]
    out = Output(_pick(args, run, "out"), "asymptotics")
    out.emit(render_csv(cfg, SCHEMA["csv"]["asymptotics"], rows), "csv")
    out.emit(render_json("asymptotics", cfg, {"verdict": rep.to_dict()}), "json", primary=False)
    return 0 if rep.passed else 1


def cmd_full_report(args) -> int:
    spec, table, run = load_domain(args.domain, args.n)
    args.seed = int(_pick(args, run, "seed", 0))
    numbers = None
    if args.criteria:
        numbers = {int(x) for x in parse_float_list(args.criteria)}
    results = acceptance.run_all(numbers, echo=lambda line: print(line, file=sys.stderr))
    dom = None
    if spec.bounded:
        rep = strong_pseudoconvexity_check(spec, 256, args.seed)
        dom = {"min_eigenvalue": rep.min_eigenvalue, "passed": rep.passed}
    ok = all(r.passed for r in results)
    payload = {"passed": ok, "criteria": [r.to_dict() for r in results], "domain_check": dom}
    text = render_json("full-report", _base_config(args, table, run), payload)
    Output(_pick(args, run, "out"), "full-report").emit(text, "json")
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robinmetric", description="Robin-function metric toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread limit")
    common.add_argument("--out", default=None, help="output directory (default: stdout/stderr)")
    dom = argparse.ArgumentParser(add_help=False)
    dom.add_argument("--domain", required=True, help="TOML or JSON domain file")
    dom.add_argument("--n", type=int, default=None, help="dimension, if absent from the domain file")
    be = argparse.ArgumentParser(add_help=False)
    be.add_argument("--backend", choices=["ball", "halfspace", "mfs"], default=None)
    be.add_argument("--mfs-m", type=int, default=None, help="MFS collocation count")
    be.add_argument("--mfs-n", type=int, default=None, help="MFS charge count")

    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("domain-check", parents=[common, dom], help="strong pseudoconvexity check")
    s.add_argument("--samples", type=int, default=256)
    s.set_defaults(func=cmd_domain_check)

    s = sub.add_parser("halfspace-verify", parents=[common], help="moment integrals: exact vs Monte Carlo")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", default="1e6")
    s.add_argument("--z-max", type=float, default=4.0)
    s.set_defaults(func=cmd_halfspace_verify)

    s = sub.add_parser("robin", parents=[common, dom, be], help="Robin function and derivatives")
    s.add_argument("--point", required=True, help="comma-separated complex coordinates")
    s.add_argument("--order", type=int, default=2)
    s.set_defaults(func=cmd_robin)

    s = sub.add_parser("metric", parents=[common, dom, be], help="metric tensor, inverse and derivative")
    s.add_argument("--point", required=True)
    s.set_defaults(func=cmd_metric)

    s = sub.add_parser("geodesic", parents=[common, dom, be], help="integrate one geodesic")
    s.add_argument("--point", required=True)
    s.add_argument("--velocity", required=True)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--samples", type=int, default=101, help="output times (0: solver steps)")
    s.add_argument("--rtol", type=float, default=1e-10)
    s.add_argument("--atol", type=float, default=1e-10)
    s.add_argument("--epsilon1", type=float, default=None, help="band depth for the escape verdict")
    s.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("band-scan", parents=[common, dom, be], help="near-boundary convexity scan")
    s.add_argument("--eps", default="0.05,0.1,0.2")
    s.add_argument("--directions", type=int, default=4)
    s.add_argument("--boundary-samples", type=int, default=32)
    s.add_argument("--p0", default=None, help="interior point for epsilon1")
    s.set_defaults(func=cmd_band_scan)

    s = sub.add_parser("asymptotics", parents=[common, dom, be], help="boundary limit convergence")
    s.add_argument("--kind", required=True, choices=[k.value for k in AsymptoticKind])
    s.add_argument("--indices", default="", help="e.g. '1,2b' (1-based, 'b' marks a barred index)")
    s.add_argument("--point", default=None, help="boundary point (default 0)")
    s.add_argument("--deltas", default="0.1,0.03,0.01,0.003,0.001")
    s.add_argument("--tolerance", type=float, default=None)
    s.add_argument("--constants", choices=["original", "corrected"], default="original")
    s.add_argument("--method", choices=["auto", "fd"], default="auto")
    s.set_defaults(func=cmd_asymptotics)

    s = sub.add_parser("full-report", parents=[common, dom], help="run the acceptance suite")
    s.add_argument("--criteria", default=None, help="comma-separated subset, e.g. '1,5,6'")
    s.set_defaults(func=cmd_full_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (RobinError, MetricError, DomainError, ProjectionError, RuntimeError, ValueError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
