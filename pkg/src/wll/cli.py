"""Command-line front end.

Exit status: 0 on success or a passing verification, 1 when a verification
fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

from . import __version__
from .diagrams import classes_of_order, enumerate_matchings, parse_diagram
from .errors import WLLError
from .geometry import Plane, RoundSphere, contour_from_spec, surface_from_spec
from .integrate import QuadratureConfig, analytic_factor, analytic_factor_via_chi, chi
from .lie import build_basis, lie_factor, parse_group
from .propagators import parse_gauge
from .wilson import (EvalContext, circle_on_sphere, explore_third_order, matrix_model_mc,
                     matrix_model_series, verify_plane_series, verify_sphere_circles)

SCHEMA = 1


class UsageError(Exception):
    """Bad flag value; carries the flag name."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


# -- argument types -----------------------------------------------------------


def _typed(fn, what):
    def convert(text):
        try:
            return fn(text)
        except (ValueError, WLLError, KeyError) as exc:
            raise argparse.ArgumentTypeError(f"invalid {what} {text!r}: {exc}") from None
    convert.__name__ = what
    return convert


group_arg = _typed(parse_group, "group")
gauge_arg = _typed(parse_gauge, "gauge")
diagram_arg = _typed(parse_diagram, "diagram")


def _points(text: str) -> list[complex]:
    return [complex(tok.replace(" ", "").replace("i", "j")) for tok in text.split(",") if tok.strip()]


points_arg = _typed(_points, "points")


def _json_file(flag: str, path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(flag, str(exc)) from None


def _load_contour(path: str):
    try:
        return contour_from_spec(_json_file("--contour", path))
    except (ValueError, KeyError, WLLError) as exc:
        raise UsageError("--contour", str(exc)) from None


def _load_surface(path: str | None):
    if path is None:
        return Plane()
    try:
        return surface_from_spec(_json_file("--surface", path))
    except (ValueError, KeyError, WLLError) as exc:
        raise UsageError("--surface", str(exc)) from None


# -- parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, sampling: bool = True, samples: int = 2_000_000):
    p.add_argument("--format", choices=("table", "json", "csv"), default="json",
                   help="report format (default json)")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp so identical runs give identical bytes")
    if sampling:
        p.add_argument("--samples", type=int, default=samples, help="number of samples")
        p.add_argument("--seed", type=int, default=0, help="root seed of the random streams")
        p.add_argument("--shards", type=int, default=1,
                       help="seed substreams (and worker threads unless WLL_THREADS is set)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wll", description="Perturbative Wilson loops in 2D Yang-Mills")
    ap.add_argument("--version", action="version", version=f"wll {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagrams", help="enumerate matchings and cyclic classes")
    p.add_argument("--order", type=int, required=True, help="perturbative order n")
    p.add_argument("--classes", action="store_true", help="list the cyclic classes")
    p.add_argument("--group", type=group_arg, help="also report Lie factors per class")
    _common(p, sampling=False)

    p = sub.add_parser("chi", help="iterated Cauchy integral")
    p.add_argument("--contour", required=True, help="contour description file (JSON)")
    p.add_argument("--points", type=points_arg, required=True,
                   help="z_n,...,z_1 as complex numbers")
    p.add_argument("--order", type=int, help="n, checked against the number of points")
    dom = p.add_mutually_exclusive_group()
    dom.add_argument("--cyclic", dest="cyclic", action="store_true", default=True,
                     help="cyclically ordered domain (default)")
    dom.add_argument("--path", dest="cyclic", action="store_false", help="path-ordered domain")
    p.add_argument("--method", choices=("mc", "sobol", "gauss"), default="mc")
    _common(p, samples=200_000)

    p = sub.add_parser("factor", help="cyclically-ordered analytic factor of one diagram")
    p.add_argument("--contour", required=True, help="contour description file (JSON)")
    p.add_argument("--surface", help="surface description file (default: plane)")
    p.add_argument("--diagram", type=diagram_arg, required=True,
                   help="matching in cycle notation, e.g. (1,3)(2,4)")
    p.add_argument("--gauge", type=gauge_arg, default=parse_gauge("hol"),
                   help="hol, alpha:<radians> or wml:<eps>[,<eps>...] (default hol)")
    p.add_argument("--method", choices=("mc", "sobol", "pairs", "chi-oracle"), default="mc")
    _common(p)

    p = sub.add_parser("series", help="matrix-model series coefficients")
    p.add_argument("--group", type=group_arg, required=True, help="u:N, su:N or so:N")
    p.add_argument("--t", type=float, required=True, help="coupling t")
    p.add_argument("--orders", type=int, default=3, help="highest order reported")
    _common(p, sampling=False)

    p = sub.add_parser("gmm-mc", help="Monte Carlo of the Gaussian matrix model")
    p.add_argument("--group", type=group_arg, required=True, help="u:N, su:N or so:N")
    p.add_argument("--t", type=float, required=True, help="coupling t")
    _common(p, samples=1_000_000)

    p = sub.add_parser("verify", help="end-to-end checks")
    vsub = p.add_subparsers(dest="which", required=True)
    v1 = vsub.add_parser("t1", help="plane series through second order vs the matrix model")
    v1.add_argument("--contour", required=True, help="contour description file (JSON)")
    v1.add_argument("--group", type=group_arg, required=True, help="u:N, su:N or so:N")
    v1.add_argument("--gauge", type=gauge_arg, default=parse_gauge("hol"),
                    help="hol, alpha:<radians> or wml:<eps>[,<eps>...] (default hol)")
    v1.add_argument("--orders", type=int, default=2, help="highest order checked")
    v1.add_argument("--method", choices=("mc", "sobol", "pairs"), default="mc")
    _common(v1)
    v2 = vsub.add_parser("t2", help="circles on the round sphere vs the matrix model at rho")
    v2.add_argument("--rho", type=float, help="build the sphere circle from rho (default 1/4)")
    v2.add_argument("--contour", help="circle about the chart origin (overrides --rho)")
    v2.add_argument("--surface", help="sphere description file (default: unit sphere)")
    v2.add_argument("--group", type=group_arg, required=True, help="u:N, su:N or so:N")
    v2.add_argument("--orders", type=int, default=3, help="highest order reported")
    v2.add_argument("--cov-samples", type=int, default=0,
                    help="also sample the nested chi covariances (n <= 2) with this many points")
    _common(v2, samples=20_000)

    p = sub.add_parser("explore", help="exploratory runs")
    esub = p.add_subparsers(dest="which", required=True)
    e3 = esub.add_parser("o3", help="third-order class factors for a contour")
    e3.add_argument("--contour", required=True, help="contour description file (JSON)")
    e3.add_argument("--group", type=group_arg, default=parse_group("u:2"),
                    help="gauge group (default u:2)")
    e3.add_argument("--gauge", type=gauge_arg, default=parse_gauge("hol"),
                    help="hol, alpha:<radians> or wml:<eps>[,<eps>...] (default hol)")
    e3.add_argument("--method", choices=("mc", "sobol", "pairs"), default="mc")
    _common(e3)
    return ap


# -- commands -----------------------------------------------------------------


def _quad(args, method: str | None = None) -> QuadratureConfig:
    if args.samples < 1:
        raise UsageError("--samples", "must be positive")
    if args.shards < 1:
        raise UsageError("--shards", "must be positive")
    return QuadratureConfig(method=method or "mc", samples=args.samples, seed=args.seed,
                            shards=args.shards)


def _evaluation(res) -> dict:
    out = {"value_re": res.value.real, "value_im": res.value.imag, "est_err": res.est_err,
           "samples": res.samples}
    for key in ("dropped", "bias_bound", "band"):
        if key in res.info:
            out[key] = res.info[key]
    return out


def cmd_diagrams(args) -> dict:
    if args.order < 0:
        raise UsageError("--order", "must be non-negative")
    ds = enumerate_matchings(args.order)
    out = {"order": args.order, "count": len(ds), "diagrams": [str(d) for d in ds]}
    if args.classes or args.group:
        b = build_basis(args.group) if args.group else None
        rows = []
        for c in classes_of_order(args.order):
            row = {"representative": str(c.representative), "orbit_size": c.orbit_size,
                   "members": [str(m) for m in c.members]}
            if b is not None:
                row["lie_factor"] = lie_factor(c.representative, b).real
            rows.append(row)
        out["class_count"] = len(rows)
        out["classes"] = rows
    return out


def cmd_chi(args) -> dict:
    c = _load_contour(args.contour)
    if args.order is not None and args.order != len(args.points):
        raise UsageError("--order", f"{args.order} does not match {len(args.points)} points")
    q = QuadratureConfig(method=args.method, samples=args.samples, seed=args.seed,
                         shards=args.shards)
    res = chi(c, args.points, "cyclic" if args.cyclic else "path", q)
    return {"domain": "cyclic" if args.cyclic else "path", "order": len(args.points),
            "seed": args.seed, **_evaluation(res)}


def cmd_factor(args) -> dict:
    c = _load_contour(args.contour)
    s = _load_surface(args.surface)
    if args.diagram.n < 1:
        raise UsageError("--diagram", "needs at least one pair")
    if args.method == "chi-oracle":
        if not args.gauge.is_holomorphic:
            raise UsageError("--gauge", "the chi oracle is holomorphic-gauge only")
        res = analytic_factor_via_chi(c, _quad(args), args.diagram, surface=s)
    else:
        res = analytic_factor(c, s, args.gauge, args.diagram, _quad(args, args.method))
    return {"diagram": str(args.diagram), "gauge": args.gauge.label(), "method": args.method,
            "seed": args.seed, **_evaluation(res)}


def cmd_series(args) -> dict:
    if args.orders < 0:
        raise UsageError("--orders", "must be non-negative")
    ser = matrix_model_series(args.group, args.t, args.orders)
    return {"group": str(args.group), "t": args.t, "coefficients": ser.coefficients,
            "provenance": ser.provenance}


def cmd_gmm(args) -> dict:
    if not args.t > 0:
        raise UsageError("--t", "must be positive")
    val, err = matrix_model_mc(args.group, args.t, _quad(args))
    series = matrix_model_series(args.group, args.t, 3)
    return {"group": str(args.group), "t": args.t, "value": val, "est_err": err,
            "seed": args.seed, "samples": args.samples,
            "series_truncation": series.evaluate(1.0)}


def cmd_verify(args) -> dict:
    if args.which == "t1":
        c = _load_contour(args.contour)
        try:
            ctx = EvalContext(c, Plane(), args.gauge, args.group, max_order=args.orders)
        except WLLError as exc:
            raise UsageError("--orders", str(exc)) from None
        return verify_plane_series(ctx, _quad(args, args.method))
    s = _load_surface(args.surface) if args.surface else RoundSphere()
    if not isinstance(s, RoundSphere):
        raise UsageError("--surface", "verify t2 needs a sphere surface")
    if args.contour:
        c = _load_contour(args.contour)
    else:
        rho = 0.25 if args.rho is None else args.rho
        if not 0 < rho <= 0.25:
            raise UsageError("--rho", "must lie in (0, 1/4]")
        c = circle_on_sphere(rho, s)
    try:
        ctx = EvalContext(c, s, parse_gauge("hol"), args.group, max_order=args.orders)
    except WLLError as exc:
        raise UsageError("--orders", str(exc)) from None
    return verify_sphere_circles(ctx, args.orders, _quad(args), cov_samples=args.cov_samples)


def cmd_explore(args) -> dict:
    c = _load_contour(args.contour)
    ctx = EvalContext(c, Plane(), args.gauge, args.group, max_order=3)
    return explore_third_order(ctx, _quad(args, args.method))


COMMANDS = {"diagrams": cmd_diagrams, "chi": cmd_chi, "factor": cmd_factor,
            "series": cmd_series, "gmm-mc": cmd_gmm, "verify": cmd_verify,
            "explore": cmd_explore}


# -- output -------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _config(args) -> dict:
    skip = {"format", "output", "no_timestamp"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v.label() if hasattr(v, "label") else str(v) if not isinstance(
            v, (int, float, bool, str, type(None))) else v
    return out


def _scalar_rows(report: dict, prefix: str = "") -> list[tuple[str, str]]:
    rows = []
    for k, v in report.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows += _scalar_rows(v, key + ".")
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, item in enumerate(v):
                rows += _scalar_rows(item, f"{key}[{i}].")
        else:
            rows.append((key, json.dumps(v) if isinstance(v, (list, bool)) or v is None else str(v)))
    return rows


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=False) + "\n"
    rows = _scalar_rows(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue()
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on malformed flags
    try:
        body = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, WLLError) as exc:
        print(f"wll: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    report = {"schema": SCHEMA, "command": " ".join(
        [args.command] + ([args.which] if hasattr(args, "which") else [])),
        "config": _config(args)}
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    report["result"] = body
    text = render(_clean(report), args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if body.get("pass") is False else 0


def main() -> None:
    sys.exit(run())
