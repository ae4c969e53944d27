"""Command-line frontend: ``canvar <command> ...``.

Exit codes: 0 success or informational, 1 at least one failed check,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Sequence

from . import catalog, geodesics, identities, nullsurf, report
from .errors import GeometryError, SinkUnwritable, UnknownIdentity, UnknownManifold
from .geometry import DEFAULT_TOLERANCES, DifferentiationConfig, curvature_bundle, sectional
from .variation import SampleSpec, VariationConfig

# flags whose values may legitimately start with "-"
_VALUE_FLAGS = {"--t", "--point", "--p0", "--v0", "--direction"}
NULL_TOL = 1e-8


class UsageError(Exception):
    pass


def decimal_list(text: str) -> list[float]:
    """Comma-separated reals, each parsed as an exact decimal before one conversion."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            d = Decimal(part)
        except InvalidOperation:
            raise argparse.ArgumentTypeError(f"not a number: {part!r}") from None
        if not d.is_finite():
            raise argparse.ArgumentTypeError(f"not finite: {part!r}")
        out.append(float(d))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def name_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def positive_float(text: str) -> float:
    (v,) = decimal_list(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


@dataclass
class RunConfig:
    command: str
    mode: str
    format: str
    output: str | None
    seed: int
    samples: int
    tolerances: dict[str, float]

    @property
    def dcfg(self) -> DifferentiationConfig:
        return DifferentiationConfig(self.mode, tolerances=self.tolerances)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags take precedence")
    p.add_argument("--mode", choices=("forward_exact", "finite_difference"), default="forward_exact")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=positive_int, default=20)
    p.add_argument("--tol-equality", type=positive_float)
    p.add_argument("--tol-inequality", type=positive_float)
    p.add_argument("--tol-guard", type=positive_float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canvar", description="Canonical variations of semi-Riemannian metrics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list catalog manifolds and fields")
    p.add_argument("action", choices=("list",))
    _common(p)

    p = sub.add_parser("curvature", help="curvature of a catalog metric or its variation at a point")
    p.add_argument("manifold")
    p.add_argument("--point", type=decimal_list, required=True)
    p.add_argument("--t", type=decimal_list, default=[0.0])
    p.add_argument("--field")
    _common(p)

    p = sub.add_parser("verify", help="sweep identities over catalog fields and parameter values")
    p.add_argument("--manifolds", type=name_list)
    p.add_argument("--identities", type=name_list)
    p.add_argument("--t", type=decimal_list)
    _common(p)

    p = sub.add_parser("geodesic", help="integrate one geodesic and measure the initial ray")
    p.add_argument("manifold")
    p.add_argument("--p0", type=decimal_list, required=True)
    p.add_argument("--v0", type=decimal_list, required=True)
    p.add_argument("--T", type=positive_float, required=True)
    p.add_argument("--t", type=decimal_list)
    p.add_argument("--field")
    _common(p)

    p = sub.add_parser("probe", help="integrate seeded unit geodesics and report terminations")
    p.add_argument("manifold")
    p.add_argument("--seeds", type=positive_int, default=8)
    p.add_argument("--T", type=positive_float, required=True)
    p.add_argument("--t", type=decimal_list)
    p.add_argument("--field")
    p.add_argument("--direction", type=decimal_list)
    _common(p)

    p = sub.add_parser("nullsurf", help="lightlike hypersurface checks under the standard variation")
    p.add_argument("example")
    p.add_argument("--points", type=positive_int, default=10)
    _common(p)
    return parser


def _glue_negative_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def read_config(path: str) -> list[str]:
    """Turn ``key = value`` lines into flag tokens (``samples = 5`` -> ``--samples=5``)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    tokens = []
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"--config: line {n} is not key = value")
        key = key.strip().replace("_", "-")
        if key == "config":
            raise UsageError("--config: nested config files are not supported")
        tokens.append(f"--{key}={value.strip()}")
    return tokens


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = _glue_negative_values(list(argv))
    args = parser.parse_args(argv)
    if args.config:
        # config tokens go first so that explicit flags override them
        extra = read_config(args.config)
        cmd_at = argv.index(args.command)
        args = parser.parse_args(argv[: cmd_at + 1] + extra + argv[cmd_at + 1:])
    return args


def run_config(args: argparse.Namespace) -> RunConfig:
    tol = dict(DEFAULT_TOLERANCES)
    if args.tol_equality is not None:
        tol["equality"] = tol["equality_fd"] = args.tol_equality
    if args.tol_inequality is not None:
        tol["inequality"] = args.tol_inequality
    if args.tol_guard is not None:
        tol["guard"] = args.tol_guard
    return RunConfig(args.command, args.mode, args.format, args.output, args.seed, args.samples, tol)


def expand_targets(names: Sequence[str] | None) -> list[str]:
    """Bare catalog ids expand to all their unit fields; ``id:field`` selects one."""
    if names is None:
        return catalog.targets()
    out = []
    for name in names:
        if ":" in name:
            catalog.resolve(name)
            out.append(name)
            continue
        entry = catalog.get_entry(name)
        out.extend(f"{entry.id}:{f}" for f, info in entry.fields.items() if info.unit)
    return out


def _emit(rc: RunConfig, text: str) -> None:
    report.write(text, rc.output)


def _table(rows: list[tuple[str, str]]) -> str:
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows) + "\n"


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{float(c):.10g}" for c in v) + "]"


# --------------------------------------------------------------------------
# commands


def cmd_catalog(args, rc: RunConfig) -> int:
    data = []
    for id in catalog.list_ids():
        e = catalog.get_entry(id)
        data.append({"id": id, "dim": e.chart.dim, "signature": e.chart.signature_hint,
                     "fields": sorted(e.fields), "tags": sorted(e.tags), "description": e.provenance})
    if rc.format == "json":
        _emit(rc, report.dumps({"schema_version": report.SCHEMA_VERSION, "manifolds": data}))
    else:
        rows = [(d["id"], f"dim {d['dim']}  {d['signature']:<10}  fields {','.join(d['fields'])}"
                 + (f"  [{','.join(d['tags'])}]" if d["tags"] else "")) for d in data]
        _emit(rc, _table(rows))
    return 0


def _chart_for(entry, field, t):
    if t == 0:
        return entry.chart
    return VariationConfig(t, entry.chart, entry.field(field).expr).chart


def cmd_curvature(args, rc: RunConfig) -> int:
    entry, fname = catalog.resolve(args.manifold)
    if args.field:
        fname = args.field
        entry.field(fname)
    if len(args.point) != entry.chart.dim:
        raise UsageError(f"--point: expected {entry.chart.dim} coordinates")
    results = []
    for t in args.t:
        chart = _chart_for(entry, fname, t)
        # frame seeded with the field, so the last frame vector is E
        b = curvature_bundle(chart, args.point, seed_field=entry.field(fname).expr, cfg=rc.dcfg)
        planes = {}
        for i in range(chart.dim):
            for j in range(i + 1, chart.dim):
                u, v = b.frame[i], b.frame[j]
                try:
                    planes[f"{i}{j}"] = sectional(b, u, v)
                except GeometryError:
                    planes[f"{i}{j}"] = None
        results.append({"t": t, "scalar": b.scalar, "metric": b.g.tolist(), "ricci": b.Ricci.tolist(),
                        "frame_sectional": planes, "signs": b.signs.tolist()})
    if rc.format == "json":
        _emit(rc, report.dumps({"manifold": entry.id, "field": fname, "point": args.point, "results": results}))
    else:
        rows = []
        for r in results:
            rows.append((f"t={r['t']:g} scalar", f"{r['scalar']:.15g}"))
            for k, v in r["frame_sectional"].items():
                rows.append((f"t={r['t']:g} K(e{k[0]},e{k[1]})", "degenerate" if v is None else f"{v:.15g}"))
        _emit(rc, _table(rows))
    return 0


def cmd_verify(args, rc: RunConfig) -> int:
    ids = args.identities
    if ids is not None:
        ids = identities.expand_ids(ids)
    targets = expand_targets(args.manifolds)
    reps = identities.run_suite(targets, ids, args.t, SampleSpec(rc.samples, rc.seed), rc.dcfg)
    report.emit_report(reps, rc.format, rc.output, rc.seed, rc.mode)
    return 1 if any(r.failed for r in reps) else 0


def _probe_t(entry, args) -> float:
    if args.t is not None:
        if len(args.t) != 1:
            raise UsageError("--t: give a single value")
        return args.t[0]
    return entry.probe_t if entry.probe_t is not None else 0.0


def cmd_geodesic(args, rc: RunConfig) -> int:
    entry, fname = catalog.resolve(args.manifold)
    fname = args.field or fname
    t = _probe_t(entry, args)
    chart = _chart_for(entry, fname, t)
    for flag, v in (("--p0", args.p0), ("--v0", args.v0)):
        if len(v) != chart.dim:
            raise UsageError(f"{flag}: expected {chart.dim} components")
    tr = geodesics.integrate_geodesic(chart, args.p0, args.v0, args.T, dcfg=rc.dcfg)
    ray = geodesics.Path.line(args.p0, args.v0)
    end = [a + args.T * b for a, b in zip(args.p0, args.v0)]
    length = geodesics.curve_length(chart, ray, (0.0, args.T)) if chart.contains(end) else None
    data = {"manifold": entry.id, "field": fname, "t": t, "termination": tr.termination,
            "final_param": tr.final_param, "norm_drift": tr.norm_drift, "speed2": tr.speed2,
            "trace_length": tr.length, "endpoint": tr.points[-1].tolist(), "steps": len(tr.params) - 1,
            "length": None if length is None else length.value, "detail": tr.detail}
    if rc.format == "json":
        _emit(rc, report.dumps(data))
    else:
        rows = [("chart", chart.name), ("termination", tr.termination + (f" ({tr.detail})" if tr.detail else "")),
                ("final_param", f"{tr.final_param:.12g}"), ("endpoint", _fmt_vec(tr.points[-1])),
                ("norm_drift", f"{tr.norm_drift:.3e}"), ("trace_length", f"{tr.length:.12g}"),
                ("length", "ray leaves the chart" if length is None else f"{length.value:.15g}")]
        _emit(rc, _table(rows))
    return 0


def cmd_probe(args, rc: RunConfig) -> int:
    entry, fname = catalog.resolve(args.manifold)
    fname = args.field or fname
    t = _probe_t(entry, args)
    chart = _chart_for(entry, fname, t)
    if args.direction is not None and len(args.direction) != chart.dim:
        raise UsageError(f"--direction: expected {chart.dim} components")
    seeds = geodesics.ProbeSeeds(args.seeds, rc.seed, tuple(args.direction) if args.direction else None)
    summary = geodesics.completeness_probe(chart, seeds, args.T, dcfg=rc.dcfg)
    if rc.format == "json":
        _emit(rc, report.dumps({"manifold": entry.id, "field": fname, "t": t, "T_max": args.T,
                                "fraction_reached": summary.fraction_reached,
                                "records": [vars(r) for r in summary.records]}))
    else:
        rows = [("chart", chart.name), ("fraction reached_T", f"{summary.fraction_reached:.3f}")]
        for k, r in enumerate(summary.records):
            rows.append((f"seed {k}", f"{r.termination:<14} s={r.final_param:.6g} length={r.length:.6g}"))
        _emit(rc, _table(rows))
    return 0


def cmd_nullsurf(args, rc: RunConfig) -> int:
    ex = nullsurf.get_example(args.example)
    if not ex.lightlike:
        raise UsageError(f"{args.example!r} is not a lightlike example")
    reports = [nullsurf.analyze(ex, q, rc.dcfg) for q in ex.sample_params(args.points, rc.seed)]
    keys = sorted(reports[0].residuals)
    worst = {k: max(r.residuals[k] for r in reports) for k in keys}
    ok = all(v <= NULL_TOL for v in worst.values())
    if rc.format == "json":
        _emit(rc, report.dumps({"example": ex.id, "seed": rc.seed, "pass": ok, "max_residuals": worst,
                                "points": [vars(r) for r in reports]}))
    else:
        rows = [(k, f"{v:.3e}") for k, v in worst.items()]
        rows += [("H_L range", f"[{min(r.H_L for r in reports):.6g}, {max(r.H_L for r in reports):.6g}]"),
                 ("H_R range", f"[{min(r.H_R for r in reports):.6g}, {max(r.H_R for r in reports):.6g}]"),
                 ("status", "pass" if ok else "FAIL")]
        _emit(rc, _table(rows))
    return 0 if ok else 1


COMMANDS = {"catalog": cmd_catalog, "curvature": cmd_curvature, "verify": cmd_verify, "geodesic": cmd_geodesic,
            "probe": cmd_probe, "nullsurf": cmd_nullsurf}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"canvar: error: {exc}", file=sys.stderr)
        return 2
    try:
        rc = run_config(args)
        return COMMANDS[args.command](args, rc)
    except UsageError as exc:
        print(f"canvar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except UnknownIdentity as exc:
        print(f"canvar {args.command}: error: --identities: {exc.args[0]}", file=sys.stderr)
        return 2
    except UnknownManifold as exc:
        flag = "--manifolds" if args.command == "verify" else ("example" if args.command == "nullsurf" else "manifold")
        print(f"canvar {args.command}: error: {flag}: {exc.args[0]}", file=sys.stderr)
        return 2
    except SinkUnwritable as exc:
        print(f"canvar {args.command}: error: --output: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"canvar {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
