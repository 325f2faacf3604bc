"""Command-line front end: ``trilab <command> [options]``.

Exit status: 0 on success, 2 when a membership or harmonicity verdict is
negative, 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import boundary, catalog, core, markov, moments
from .catalog import BoundaryPoint, catalog_triangle, parse_point
from .io import (
    dumps,
    kernel_from_json,
    rational_str,
    rows_csv,
    rows_json,
    table_json,
    value_json,
)
from .specfile import load_triangle, triangle_from_spec, triangle_to_spec

DIGITS_ENV = "TRILAB_DIGITS"

COMMANDS = (
    "dims",
    "ext-dims",
    "kernel",
    "extreme",
    "verify",
    "cm-check",
    "transpose",
    "backtrans",
    "marginal",
    "sample",
    "monotone",
    "sweep",
    "discrete-check",
    "martingale",
    "phase",
    "synth",
    "invert",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pair(text):
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from exc
    return a, b


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--triangle", default="pascal", help="catalog name or 'custom'")
    common.add_argument("--q")
    common.add_argument("--alpha")
    common.add_argument("--left", help="custom left multiplicity expression in n,k")
    common.add_argument("--right", help="custom right multiplicity expression in n,k")
    common.add_argument("--spec", help="JSON triangle spec file")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--precision", default="auto", help="exact | auto | float[:digits] (sweep arithmetic, CSV digits)"
    )

    parser = _Parser(prog="trilab", description="Boundary laboratory for weighted number triangles.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("dims", "dimensions D[n,k]")
    p.add_argument("--depth", type=int, required=True)
    p = add("ext-dims", "extended dimensions towards a target node")
    p.add_argument("--target", type=_pair, required=True)
    p = add("kernel", "Martin kernel of a target node")
    p.add_argument("--target", type=_pair, required=True)
    p.add_argument("--depth", type=int)
    p = add("extreme", "closed-form extreme at a boundary point")
    p.add_argument("--point", required=True)
    p.add_argument("--depth", type=int, required=True)
    p = add("verify", "check the harmonic recursion")
    p.add_argument("--point")
    p.add_argument("--target", type=_pair)
    p.add_argument("--kernel-file")
    p.add_argument("--depth", type=int)
    p = add("cm-check", "generalized complete monotonicity of a first column")
    p.add_argument("--seq", type=_list, required=True)
    p.add_argument("--depth", type=int)
    p = add("transpose", "multiplicities of the transposed triangle")
    p.add_argument("--depth", type=int, default=5)
    p = add("backtrans", "backward transition law from a node")
    p.add_argument("--node", type=_pair, required=True)
    p = add("marginal", "law of K_n under an extreme")
    p.add_argument("--point", required=True)
    p.add_argument("--level", type=int, required=True)
    p = add("sample", "sample backward trajectories")
    p.add_argument("--start", type=_pair, required=True)
    p.add_argument("--size", type=int, default=1)
    p = add("monotone", "monotonicity of V^{nu,kappa}[n,0] in kappa")
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--level", type=int, required=True)
    for name, help_text in (("sweep", "Martin kernels along a path"), ("phase", "phase-transition sweep")):
        p = add(name, help_text)
        p.add_argument("--path", required=True, help="e.g. constant:m=1 or scaled:s=1/2,c=nu")
        p.add_argument("--n-max", type=int, default=3)
        p.add_argument("--nus", type=_ints, required=True)
        p.add_argument("--tol", type=float, default=boundary.DEFAULT_TOL)
        p.add_argument("--window", type=int, default=boundary.DEFAULT_WINDOW)
        p.add_argument("--jobs", type=int, default=1)
        if name == "phase":
            p.add_argument("--family", choices=("q-pascal", "stirling"), required=True)
            p.add_argument("--params", type=_list, required=True)
    p = add("discrete-check", "V[n,m](m) D[n,m] along levels")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p = add("martingale", "empirical convergence of V^{nu,K_nu} to V")
    p.add_argument("--point", required=True)
    p.add_argument("--nu-max", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--checkpoints", type=_ints)
    p = add("synth", "convex mixture of extremes")
    p.add_argument("--points", type=_list, required=True)
    p.add_argument("--weights", type=_list, required=True)
    p.add_argument("--depth", type=int, required=True)
    p = add("invert", "recover a mixing measure from a first column")
    p.add_argument("--seq", type=_list, required=True)
    p.add_argument("--atoms", type=_list)
    p.add_argument("--grid", type=int, help="Pascal grid x = j/N, j = 1..N")
    p.add_argument("--method", choices=("active-set", "projected-gradient"), default="active-set")
    p.add_argument("--tol", type=float, default=1e-8)
    return parser


def _triangle(args):
    if args.spec:
        return load_triangle(args.spec)
    if args.triangle == "custom" or args.left or args.right:
        if not (args.left and args.right):
            raise UsageError("custom triangles need both --left and --right")
        return triangle_from_spec({"name": "custom", "left": args.left, "right": args.right})
    params = {}
    if args.q is not None:
        params["q"] = args.q
    if args.alpha is not None:
        params["alpha"] = args.alpha
    return catalog_triangle(args.triangle, **params)


def _precision(args):
    text = args.precision
    digits = int(os.environ.get(DIGITS_ENV, "12"))
    if text in ("exact", "auto", "float"):
        return text, digits
    if text.startswith("float:"):
        return "float", int(text.split(":", 1)[1])
    raise UsageError(f"bad --precision {text!r}")


def _law_json(law):
    return {"level": law.n, "probs": [value_json(p) for p in law.probs]}


def _measure_json(mm: moments.MixingMeasure):
    return {
        "atoms": [{"point": pt.label, "weight": w} for pt, w in mm.atoms],
        "residual": mm.residual,
        "representable": mm.representable,
        "note": mm.note,
        "depth": mm.depth,
        "method": mm.method,
        "iterations": mm.iterations,
        "diagnostics": {"gradient_mapping_norm": mm.gradient_norm, "condition_number": mm.condition},
    }


def _discrete_kind(tri):
    kinds = {"q-pascal": "qpascal-m", "stirling": "stirling-m", "stirling-inf": "stirling-m", "eulerian": "eulerian-m"}
    if tri.name not in kinds:
        raise UsageError(f"no discrete parametrisation for {tri.name}")
    return kinds[tri.name]


def _run(args, tri, mode, digits):
    """Returns ``(result, csv_rows, exit_code)``."""
    cmd = args.command
    if cmd == "dims":
        table = core.dimensions(tri, args.depth)
        return table_json(table), table.rows, 0
    if cmd == "ext-dims":
        table = core.extended_dimensions(tri, args.target)
        return table_json(table), table.rows, 0
    if cmd == "kernel":
        V = core.martin_kernel(tri, args.target, args.depth)
        return table_json(V), V.rows, 0
    if cmd == "extreme":
        point = parse_point(tri, args.point)
        V = catalog.extreme_kernel(tri, point, args.depth)
        result = table_json(V)
        result.update(point=point.label, coordinate=value_json(catalog.boundary_coordinate(tri, V)))
        return result, V.rows, 0
    if cmd == "verify":
        V = _kernel_for_verify(args, tri)
        report = core.verify_harmonic(tri, V, args.depth)
        result = {
            "ok": report.ok,
            "depth": report.depth,
            "normalized": report.normalized,
            "residuals": [{"node": [x.n, x.k], "residual": value_json(r)} for x, r in report.residuals],
            "negatives": [{"node": [x.n, x.k], "value": value_json(v)} for x, v in report.negatives],
        }
        rows = [("n", "k", "residual")] + [(x.n, x.k, r) for x, r in report.residuals]
        return result, rows, 0 if report.ok else 2
    if cmd == "cm-check":
        seq = [Fraction(s) for s in args.seq]
        if tri.name == "pascal":
            report = moments.hausdorff_check(seq)
        elif tri.name == "q-pascal" and 0 < tri.param_dict["q"] < 1:
            report = moments.qpascal_cm_check(tri.param_dict["q"], seq, args.depth)
        else:
            report = moments.cm_check(tri, seq, args.depth)
        result = {
            "verdict": report.verdict.value,
            "label": report.label,
            "depth": report.depth,
            "kernel": table_json(report.kernel),
        }
        if report.cross_check is not None:
            result["cross_check"] = _measure_json(report.cross_check)
        rows = [("verdict", report.verdict.value)] + list(report.kernel.rows)
        return result, rows, 0 if report.verdict is core.Verdict.ACCEPT else 2
    if cmd == "transpose":
        t = core.transpose(tri)
        left = [[t.left(n, k) for k in range(n + 1)] for n in range(args.depth + 1)]
        right = [[t.right(n, k) for k in range(n + 1)] for n in range(args.depth + 1)]
        result = {"name": t.name, "left": rows_json(left), "right": rows_json(right)}
        rows = [("side", "n", "values")] + [("left", n, *r) for n, r in enumerate(left)] + [
            ("right", n, *r) for n, r in enumerate(right)
        ]
        return result, rows, 0
    if cmd == "backtrans":
        n, k = args.node
        law = markov.backward_transition(tri, core.dimensions(tri, n), n, k)
        return _law_json(law), [law.probs], 0
    if cmd == "marginal":
        point = parse_point(tri, args.point)
        V = catalog.extreme_kernel(tri, point, args.level)
        law = markov.marginal_law(tri, core.dimensions(tri, args.level), V, args.level)
        return _law_json(law), [law.probs], 0
    if cmd == "sample":
        nu, kappa = args.start
        paths = markov.sample_backward_paths(tri, core.dimensions(tri, nu), (nu, kappa), args.size, args.seed)
        result = {"start": [nu, kappa], "levels": list(range(nu, -1, -1)), "states": paths.tolist()}
        if args.size == 1:
            rows = [("level", "state")] + [(nu - i, int(s)) for i, s in enumerate(paths[0])]
        else:
            rows = [("trajectory", "level", "state")] + [
                (t, nu - i, int(s)) for t, path in enumerate(paths) for i, s in enumerate(path)
            ]
        return result, rows, 0
    if cmd == "monotone":
        report = markov.check_monotone_in_kappa(tri, args.nu, args.level)
        result = {
            "nu": report.nu,
            "level": report.n,
            "values": [value_json(v) for v in report.values],
            "violations": report.violations,
            "dominance": [d.value for d in report.dominance],
            "ok": report.ok,
        }
        rows = [("kappa", "value")] + list(enumerate(report.values))
        return result, rows, 0 if report.ok else 2
    if cmd == "sweep":
        path = boundary.parse_path(args.path)
        trace = boundary.path_kernel_sequence(
            tri, path, args.n_max, args.nus, mode, args.tol, args.window, args.jobs
        )
        return _trace_json(trace), [("nu", "n", "k", "value")] + list(trace.rows()), 0
    if cmd == "phase":
        path = boundary.parse_path(args.path)
        key = "q" if args.family == "q-pascal" else "alpha"
        family = lambda v: catalog_triangle(args.family, **{key: v})
        table = boundary.phase_transition_sweep(
            family, args.params, path, args.n_max, args.nus, mode, args.tol, args.window, args.jobs
        )
        result = [
            {
                "param": rational_str(r.param),
                "path": r.path,
                "verdict": r.verdict,
                "first_column": r.first_column,
                "coordinate": r.coordinate,
                "spread": r.spread,
            }
            for r in table
        ]
        rows = [("param", "verdict", "coordinate")] + [
            (rational_str(r.param), r.verdict, r.coordinate if r.coordinate is not None else "") for r in table
        ]
        return result, rows, 0
    if cmd == "discrete-check":
        family = boundary.catalog_family(tri, _discrete_kind(tri))
        trace = boundary.discrete_boundary_check(tri, family, args.m, args.depth)
        result = {
            "m": trace.m,
            "levels": trace.levels,
            "values": [value_json(v) for v in trace.values],
            "distances": [value_json(v) for v in trace.distances],
        }
        return result, [("n", "value")] + list(zip(trace.levels, trace.values)), 0
    if cmd == "martingale":
        point = parse_point(tri, args.point)
        stats = boundary.martingale_experiment(
            tri, point, args.nu_max, args.trials, args.seed, args.checkpoints
        )
        result = {
            "point": point.label,
            "node": list(stats.node),
            "target": stats.target,
            "checkpoints": stats.checkpoints,
            "mean_deviation": stats.mean_deviation,
            "max_deviation": stats.max_deviation,
            "trials": stats.trials,
        }
        rows = [("nu", "mean_deviation", "max_deviation")] + list(
            zip(stats.checkpoints, stats.mean_deviation, stats.max_deviation)
        )
        return result, rows, 0
    if cmd == "synth":
        points = [parse_point(tri, p) for p in args.points]
        kernels = [catalog.extreme_kernel(tri, p, args.depth) for p in points]
        V = moments.synthesize_mixture(kernels, [Fraction(w) for w in args.weights])
        return table_json(V), V.rows, 0
    if cmd == "invert":
        seq = [Fraction(s) for s in args.seq]
        if args.grid:
            atoms = [BoundaryPoint("pascal-x", Fraction(j, args.grid)) for j in range(1, args.grid + 1)]
        elif args.atoms:
            atoms = [parse_point(tri, a) for a in args.atoms]
        else:
            raise UsageError("invert needs --atoms or --grid")
        mm = moments.invert_mixture(tri, seq, atoms, method=args.method, tol=args.tol)
        rows = [("point", "weight")] + [(pt.label, w) for pt, w in mm.atoms]
        return _measure_json(mm), rows, 0 if mm.representable else 2
    raise UsageError(f"unknown command {cmd!r}")


def _kernel_for_verify(args, tri):
    if args.kernel_file:
        data = json.loads(Path(args.kernel_file).read_text())
        return kernel_from_json(data.get("result", data))
    if args.point:
        if args.depth is None:
            raise UsageError("verify --point needs --depth")
        return catalog.extreme_kernel(tri, parse_point(tri, args.point), args.depth)
    if args.target:
        return core.martin_kernel(tri, args.target)
    raise UsageError("verify needs --point, --target or --kernel-file")


def _trace_json(trace):
    return {
        "path": trace.path.label,
        "n_max": trace.n_max,
        "tolerance": trace.tolerance,
        "verdict": trace.verdict.status,
        "spread": trace.verdict.spread,
        "samples": [
            {"nu": nu, "kappa": kappa, "kernel": table_json(V)} for nu, kappa, V in trace.samples
        ],
    }


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        mode, digits = _precision(args)
        tri = _triangle(args)
        result, rows, code = _run(args, tri, mode, digits)
    except UsageError as exc:
        print(f"trilab: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, ZeroDivisionError, KeyError, OSError) as exc:
        print(f"trilab: error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 1
    spec = triangle_to_spec(tri) if args.command != "phase" else {"name": args.family, "params": {}}
    meta = {"command": args.command, "triangle": spec, "seed": args.seed, "precision": args.precision}
    if args.format == "json":
        text = dumps({**meta, "result": result})
    else:
        # CSV stays pure data; the run metadata travels in a sidecar (or stderr).
        text = rows_csv(rows, digits)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        if args.format == "csv":
            with open(args.out + ".meta.json", "w") as fh:
                fh.write(dumps(meta))
    else:
        sys.stdout.write(text)
        if args.format == "csv":
            print("# " + json.dumps(meta, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
