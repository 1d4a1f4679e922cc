"""Command-line interface: classify, verify, demo, crosscheck, field.

Every run emits a single JSON report with the inputs echoed (command line,
seeds, parsed config, tool version) so that replaying the manifest
reproduces the report byte for byte.  Timestamps are therefore omitted
unless explicitly requested with --stamp-time.  Exit codes: 0 success,
1 precondition failure, 2 parse/usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .binio import BinaryFormatError, write_field
from .classify import SphereSampling, classify, classify_on_kernel, is_c_elliptic
from .operators import CONVENTIONS, PARTMAP_ALIASES, catalog_operator, catalog_partmap
from .specfile import ConfigError, SpecFileError, load_verify_config, parse_operator_file
from .torus import TorusGrid, bump_field, lp_norm, plane_wave_field, random_bandlimited
from .verify import (
    PreconditionError,
    check_hypotheses,
    curl_riesz_crosscheck,
    estimate_constant,
    necessity_demo,
    refinement_study,
    worker_count,
)

REPORT_SCHEMA_VERSION = 1


def _manifest(args, seed, config_echo):
    return {
        "command": list(args.argv),
        "seed": seed,
        "workers": worker_count(),
        "timestamp": datetime.now(timezone.utc).isoformat() if args.stamp_time else None,
        "config": config_echo,
        "conventions": dict(CONVENTIONS),
    }


def _report(args, seed, config_echo, results):
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": "kmslab", "version": __version__},
        "manifest": _manifest(args, seed, config_echo),
        "results": results,
    }


def _emit(report, out):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        print(f"report written to {out}")
    else:
        sys.stdout.write(text)


def _csv_ints(text, what):
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError(what, f"expected comma-separated integers, got {text!r}") from None


def _csv_floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError(what, f"expected comma-separated numbers, got {text!r}") from None


def _load_operator(args):
    if args.spec:
        return parse_operator_file(args.spec)
    if args.catalog:
        if args.n is None:
            raise ConfigError("n", "--catalog needs --n")
        try:
            return catalog_operator(args.catalog, args.n)
        except (KeyError, ValueError) as exc:
            raise ConfigError("catalog", str(exc)) from None
    raise ConfigError("spec", "one of --spec or --catalog is required")


def _resolve_partmap(name, n, dim=None):
    try:
        key = PARTMAP_ALIASES.get(name, name)
        return catalog_partmap(key, n, dim=dim if key in ("identity", "zero") else None)
    except (KeyError, ValueError) as exc:
        raise ConfigError("partmap", str(exc)) from None


def cmd_classify(args):
    spec = _load_operator(args)
    sampling = SphereSampling.standard(spec.n, count=args.samples, seed=args.seed)
    if args.on_kernel_of:
        part = _resolve_partmap(args.on_kernel_of, spec.n, dim=spec.d)
        report = classify_on_kernel(spec, part, sampling, tol=args.tol)
        config_echo = {
            "operator": spec.name,
            "on_kernel_of": part.name,
            "samples": args.samples,
            "tol": args.tol,
        }
    else:
        report = classify(spec, sampling, tol=args.tol)
        config_echo = {"operator": spec.name, "samples": args.samples, "tol": args.tol}
    results = report.to_dict()
    if args.complex:
        complex_sampling = SphereSampling.standard(
            spec.n, count=args.samples, seed=args.seed, complex_mode=True
        )
        verdict = is_c_elliptic(spec, complex_sampling, tol=args.tol, refine_steps=args.refine)
        results["is_c_elliptic"] = verdict.to_dict()
    _emit(_report(args, args.seed, config_echo, results), args.out)
    return 0


def cmd_verify(args):
    config, extras = load_verify_config(args.config)
    if args.grid is not None:
        config = config.with_grid(TorusGrid(config.n, args.grid))
    trials = args.trials if args.trials is not None else extras["trials"]
    seed = args.seed if args.seed is not None else extras["seed"]
    ok, note, _ = check_hypotheses(config)
    if not ok:
        print(f"precondition failure: {note}", file=sys.stderr)
        return 1
    sizes = _csv_ints(args.refine, "refine") if args.refine else extras.get("sizes")
    if sizes:
        study = refinement_study(config, sizes, trials=trials, seed=seed)
        results = {"kind": "refinement_study", "study": study.to_dict()}
    else:
        estimate = estimate_constant(config, trials=trials, seed=seed)
        results = {"kind": "estimate_constant", "estimate": estimate.to_dict()}
    _emit(_report(args, seed, config.describe(), results), args.out)
    return 0


def cmd_demo_necessity(args):
    try:
        spec = catalog_operator(args.B, args.n)
    except (KeyError, ValueError) as exc:
        raise ConfigError("B", str(exc)) from None
    part = _resolve_partmap(args.A, args.n, dim=spec.d)
    grid = TorusGrid(args.n, args.grid)
    demo = necessity_demo(part, spec, grid, p=args.p)
    config_echo = {
        "A": part.name,
        "B": spec.name,
        "n": args.n,
        "grid": args.grid,
        "p": args.p,
    }
    _emit(_report(args, None, config_echo, demo.to_dict()), args.out)
    return 0


def cmd_crosscheck(args):
    grid = TorusGrid(3, args.grid) if args.grid else None
    result = curl_riesz_crosscheck(
        mode=args.mode, grid=grid, eval_points=args.points, width=args.width
    )
    config_echo = {"check": "curl-riesz", "mode": args.mode}
    _emit(_report(args, None, config_echo, result.to_dict()), args.out)
    return 0


def cmd_field_gen(args):
    grid = TorusGrid(args.n, args.grid)
    if args.kind == "random":
        if args.d is None:
            raise ConfigError("d", "random fields need --d")
        cutoff = args.cutoff if args.cutoff else max(1, args.grid // 4)
        field = random_bandlimited(grid, args.d, cutoff, seed=args.seed)
        descriptor = {"kind": "random", "d": args.d, "cutoff": cutoff, "seed": args.seed}
    elif args.kind == "plane":
        if not args.xi or not args.value:
            raise ConfigError("xi", "plane waves need --xi and --value")
        xi = np.array(_csv_ints(args.xi, "xi"))
        v = np.array(_csv_floats(args.value, "value"))
        field = plane_wave_field(grid, xi, v)
        descriptor = {"kind": "plane", "xi": xi.tolist(), "value": v.tolist()}
    else:
        if not args.value:
            raise ConfigError("value", "bump fields need --value")
        v = np.array(_csv_floats(args.value, "value"))
        center = (
            np.array(_csv_floats(args.center, "center"))
            if args.center
            else np.full(args.n, np.pi)
        )
        field = bump_field(grid, center, args.width, v)
        descriptor = {
            "kind": "bump",
            "center": center.tolist(),
            "width": args.width,
            "value": v.tolist(),
        }
    write_field(args.out, field)
    summary = _report(
        args,
        args.seed,
        descriptor,
        {
            "written": str(args.out),
            "l2_norm": lp_norm(field, 2),
            "fiber_dim": field.fiber_dim,
            "points_per_axis": grid.points_per_axis,
        },
    )
    _emit(summary, args.report)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kmslab",
        description="Symbol classification and Korn-Maxwell-Sobolev inequality trials on the discrete torus",
    )
    parser.add_argument("--version", action="version", version=f"kmslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cls = sub.add_parser("classify", help="classify an operator symbol")
    p_cls.add_argument("--spec", help="operator spec file (.op)")
    p_cls.add_argument("--catalog", help="catalog operator name")
    p_cls.add_argument("--n", type=int, help="ambient dimension (with --catalog)")
    p_cls.add_argument("--on-kernel-of", help="restrict to the kernel of this part map")
    p_cls.add_argument("--samples", type=int, default=2048)
    p_cls.add_argument("--seed", type=int, default=1729)
    p_cls.add_argument("--tol", type=float, default=1e-8)
    p_cls.add_argument("--complex", action="store_true", help="add a sampled C-ellipticity verdict")
    p_cls.add_argument("--refine", type=int, default=0, help="Nelder-Mead steps for the C-ellipticity witness")
    p_cls.add_argument("--out", help="report path (stdout when omitted)")
    p_cls.set_defaults(func=cmd_classify)

    p_ver = sub.add_parser("verify", help="estimate an inequality constant")
    p_ver.add_argument("--config", required=True, help="JSON config file (.cfg)")
    p_ver.add_argument("--trials", type=int, help="random-field trial count override")
    p_ver.add_argument("--seed", type=int, help="root seed override")
    p_ver.add_argument("--grid", type=int, help="points-per-axis override")
    p_ver.add_argument("--refine", help="comma-separated grid sizes for a refinement study")
    p_ver.add_argument("--out", help="report path (stdout when omitted)")
    p_ver.set_defaults(func=cmd_verify)

    p_demo = sub.add_parser("demo", help="demonstrations")
    demo_sub = p_demo.add_subparsers(dest="demo_command", required=True)
    p_nec = demo_sub.add_parser("necessity", help="necessity of the correction term")
    p_nec.add_argument("--A", required=True, help="part map name (e.g. tr)")
    p_nec.add_argument("--B", required=True, help="catalog operator name (e.g. curl3)")
    p_nec.add_argument("--n", type=int, default=3)
    p_nec.add_argument("--grid", type=int, default=16)
    p_nec.add_argument("--p", type=float, default=2.0)
    p_nec.add_argument("--out", help="report path (stdout when omitted)")
    p_nec.set_defaults(func=cmd_demo_necessity)

    p_cc = sub.add_parser("crosscheck", help="cross-checks against closed forms")
    cc_sub = p_cc.add_subparsers(dest="crosscheck_command", required=True)
    p_cr = cc_sub.add_parser("curl-riesz", help="explicit Riesz kernel for the Curl correction")
    p_cr.add_argument("--mode", choices=("symbol", "quadrature"), default="symbol")
    p_cr.add_argument("--grid", type=int, help="points per axis (defaults: 16 symbol, 32 quadrature)")
    p_cr.add_argument("--points", type=int, default=10, help="evaluation points (quadrature)")
    p_cr.add_argument("--width", type=float, default=0.5, help="bump width (quadrature)")
    p_cr.add_argument("--out", help="report path (stdout when omitted)")
    p_cr.set_defaults(func=cmd_crosscheck)

    p_field = sub.add_parser("field", help="field generators")
    field_sub = p_field.add_subparsers(dest="field_command", required=True)
    p_gen = field_sub.add_parser("gen", help="generate a field snapshot")
    p_gen.add_argument("--kind", choices=("random", "plane", "bump"), required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--grid", type=int, required=True)
    p_gen.add_argument("--d", type=int, help="fiber dimension (random)")
    p_gen.add_argument("--cutoff", type=int, help="band limit (random)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--xi", help="comma-separated integer frequency (plane)")
    p_gen.add_argument("--value", help="comma-separated fiber vector (plane/bump)")
    p_gen.add_argument("--center", help="comma-separated center (bump)")
    p_gen.add_argument("--width", type=float, default=0.5, help="bump width")
    p_gen.add_argument("--out", required=True, help="binary field output (.kfd)")
    p_gen.add_argument("--report", help="JSON summary path (stdout when omitted)")
    p_gen.set_defaults(func=cmd_field_gen)

    for sp in (p_cls, p_ver, p_nec, p_cr, p_gen):
        sp.add_argument(
            "--stamp-time",
            action="store_true",
            help="include a wall-clock timestamp (reports stop being byte-reproducible)",
        )
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (SpecFileError, ConfigError, BinaryFormatError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
