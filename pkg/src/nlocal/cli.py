"""``nlocal`` command line: evaluate, sweep, audit and optimise network scenarios.

Exit codes: 0 success, 1 usage or parse error, 2 constraint or criterion failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from importlib.resources import files

import numpy as np

from . import scenario_io
from .inequalities import evaluate
from .linalg import REPORT_TOL
from .measurements import IncompatibleError, MeasurementPair, compatibility_threshold, is_compatible
from .network import LINEAR, MAX_N, ScenarioError
from .scenario_io import ScenarioParseError
from .search import EdgeSpec, InfeasibleError, SearchSpec, optimize
from .states import InvalidStateError
from .theorems import (
    CriterionError,
    thm1_construct,
    thm2_audit,
    thm3_bilocal_model,
    thm4_construct,
    thm5_audit,
    thm6_star_model,
    thm7_fnn_decompose,
)

EXIT_OK, EXIT_USAGE, EXIT_CRITERION = 0, 1, 2
MODEL_TOL = 1e-10
FACTOR_TOL = 1e-12
# name -> packaged scenario file, in report order
EXAMPLES = {
    "bilocal-example": "bilocal_example.scn",
    "trilocal-star": "trilocal_star.scn",
    "fourlocal-linear": "fourlocal_linear.scn",
    "fourlocal-star": "fourlocal_star.scn",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output -----------------------------------------------------------------------


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def _machine(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if v is None:
        return ""
    return str(v)


def _human(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.5g}"
    if v is None:
        return "-"
    return str(v)


def _json(v) -> str:
    """JSON with floats at 17 significant digits (non-finite as null)."""
    v = _plain(v)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}" if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{_json(str(k))}: {_json(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_machine(r.get(c)) for c in columns])
    return buf.getvalue()


def to_table(rows: list[dict], columns: list[str]) -> str:
    if len(rows) == 1 and len(columns) > 6:
        width = max(len(c) for c in columns)
        return "".join(f"{c:<{width}}  {_human(rows[0].get(c))}\n" for c in columns)
    cells = [[_human(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines += ["  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def to_json(rows: list[dict], columns: list[str]) -> str:
    objs = [{c: r.get(c) for c in columns} for r in rows]
    return _json(objs[0] if len(objs) == 1 else objs) + "\n"


_FORMATTERS = {"table": to_table, "csv": to_csv, "json": to_json}


def emit(args, rows: list[dict], columns: list[str], default: str = "table", extra_text: str = "") -> None:
    """Print rows in the chosen format; ``--report`` also gets a machine-format copy."""
    fmt = args.format or default
    out = _FORMATTERS[fmt](rows, columns)
    sys.stdout.write(out)
    if extra_text and fmt == "table":
        sys.stdout.write(extra_text)
    if args.report:
        report_fmt = fmt if fmt != "table" else "json"
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_FORMATTERS[report_fmt](rows, columns))


# --- helpers ----------------------------------------------------------------------


def _load(args, path):
    doc = scenario_io.load(path)
    return doc, doc.build(args.max_n)


def _report_row(sc, report) -> dict:
    row = {
        "topology": sc.topology,
        "n": sc.n,
        "functional": report.functional,
        "lhs": report.lhs,
        "bound": report.bound,
        "violated": report.violated,
        "analytic": report.analytic,
        "family": report.family,
        "discrepancy": report.discrepancy,
    }
    for label, value in zip(report.correlator_labels, report.correlators):
        row[label] = value
    for p in sc.parties:
        if p.pair is not None:
            ok, margin = is_compatible(p.pair)
            row[f"{p.name} margin"] = margin
            row[f"{p.name} compatible"] = ok
    return row


def _reference_row(doc, args, analytic, lhs) -> dict:
    ref = doc.reference
    if "quoted" not in ref:
        return {}
    quoted = float(ref["quoted"])
    tol = float(ref.get("tolerance", 1e-3))
    value = analytic if analytic is not None else lhs
    row = {"quoted": quoted, "quoted_gap": abs(value - quoted), "quoted_match": abs(value - quoted) <= tol}
    alt = ref.get("alternative")
    if alt:
        d = doc
        for path, v in alt.items():
            d = d.with_param(path, scenario_io.parse_number(v))
        row["alternative"] = evaluate(d.build(args.max_n)).lhs
    row["note"] = ref.get("note")
    return row


def _name_value(items: list[str], flag: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"{flag} expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# --- commands -----------------------------------------------------------------------


def cmd_reproduce(args) -> int:
    rows, status = [], EXIT_OK
    for name, fname in EXAMPLES.items():
        text = files("nlocal").joinpath("data").joinpath(fname).read_text(encoding="utf-8")
        doc = scenario_io.loads(text, fname)
        sc = doc.build(args.max_n)
        report = evaluate(sc)
        consistent = report.analytic is not None and report.discrepancy <= REPORT_TOL
        if not consistent:
            status = EXIT_CRITERION
        incompatible = [p.name for p in sc.parties if p.pair is not None and not is_compatible(p.pair)[0]]
        row = {
            "experiment": name,
            "behavior_lhs": report.lhs,
            "closed_form": report.analytic,
            "consistent": consistent,
            "violated": report.violated,
            "incompatible": " ".join(incompatible),
        }
        row.update(_reference_row(doc, args, report.analytic, report.lhs))
        rows.append(row)
    columns = ["experiment", "behavior_lhs", "closed_form", "consistent", "violated", "incompatible",
               "quoted", "quoted_gap", "quoted_match", "alternative", "note"]
    emit(args, rows, columns)
    return status


def cmd_eval(args) -> int:
    doc, sc = _load(args, args.path)
    report = evaluate(sc)
    row = _report_row(sc, report)
    row.update(_reference_row(doc, args, report.analytic, report.lhs))
    emit(args, [row], list(row))
    return EXIT_OK


def cmd_scan(args) -> int:
    doc = scenario_io.load(args.path)
    axes = []
    for spec in args.vary:
        try:
            path, values = scenario_io.parse_vary(spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        scenario_io.resolve_path(doc, path)
        axes.append((path, values))
    rows = []
    for combo in itertools.product(*(values for _, values in axes)):
        d = doc
        for (path, _), v in zip(axes, combo):
            d = d.with_param(path, float(v))
        report = evaluate(d.build(args.max_n))
        row = {path: float(v) for (path, _), v in zip(axes, combo)}
        row.update(lhs=report.lhs, analytic=report.analytic, violated=report.violated)
        rows.append(row)
    emit(args, rows, [p for p, _ in axes] + ["lhs", "analytic", "violated"], default="csv")
    return EXIT_OK


def cmd_compat(args) -> int:
    try:
        t = scenario_io.parse_number(args.t)
        eta = scenario_io.parse_number(args.eta)
        pair = MeasurementPair.family(args.plane, t, eta)
        threshold = compatibility_threshold(args.plane, t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok, margin = is_compatible(pair)
    row = {"plane": args.plane, "t": t, "eta": eta, "threshold": threshold, "compatible": ok, "margin": margin}
    verdict = f"{'compatible' if ok else 'incompatible'}, margin {margin:.5g}\n"
    if (args.format or "table") == "table":
        sys.stdout.write(verdict)
        if args.report:
            with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(to_json([row], list(row)))
    else:
        emit(args, [row], list(row))
    return EXIT_OK


_AUDITS = {"thm2": (thm2_audit, 1000, [2]), "thm5": (thm5_audit, 300, [3])}


def cmd_audit(args) -> int:
    fn, default_samples, default_n = _AUDITS[args.thm]
    samples = default_samples if args.samples is None else args.samples
    seed = args.seed_pos if args.seed_pos is not None else (args.seed if args.seed is not None else 0)
    if samples < 1:
        raise UsageError("samples must be positive")
    ns = args.n or default_n
    if any(n > args.max_n for n in ns):
        raise UsageError(f"n exceeds --max-n {args.max_n}")
    rows, passed = [], True
    for n in ns:
        try:
            res = fn(n, samples, seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        passed &= res.passed
        rows.append({
            "theorem": res.theorem, "n": n, "samples": samples, "seed": seed,
            "max_lhs": res.max_lhs, "argmax": res.argmax, "max_lhs_canonical": res.max_lhs_canonical,
            "max_formula_gap": res.max_formula_gap, "behavior_level": res.behavior_level, "passed": res.passed,
        })
    text = "".join(
        f"n={r['n']}: max lhs {r['max_lhs']:.5g} {'<=' if r['passed'] else '>'} 1 {'pass' if r['passed'] else 'FAIL'}\n"
        for r in rows
    )
    emit(args, rows, list(rows[0]), extra_text=text)
    return EXIT_OK if passed else EXIT_CRITERION


def _construction(args, sc) -> int:
    if args.thm == "thm1":
        if sc.topology != LINEAR or sc.n != 2:
            raise UsageError("thm1 needs a bilocal chain scenario")
        res = thm1_construct(sc.sources)
    else:
        if sc.topology == LINEAR:
            raise UsageError("thm4 needs a star scenario")
        res = thm4_construct(sc.sources)
    row = {"theorem": res.theorem, "angle": res.angle}
    for name, eta in res.etas.items():
        ok, margin = res.compatibility[name]
        row[f"{name} eta"] = eta
        row[f"{name} margin"] = margin
    row.update(criterion_lhs=res.criterion[0], criterion_rhs=res.criterion[1], analytic_lhs=res.analytic_lhs,
               behavior_lhs=res.behavior_lhs, violated=res.violated, pattern_ok=res.pattern_ok)
    out_text = scenario_io.dumps(res.scenario, header=f"{res.theorem} construction, lhs {res.analytic_lhs!r}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out_text)
    emit(args, [row], list(row), extra_text="\n" + out_text)
    ok = res.violated and res.pattern_ok and (res.discrepancy is None or res.discrepancy <= REPORT_TOL)
    return EXIT_OK if ok else EXIT_CRITERION


def cmd_model(args) -> int:
    _, sc = _load(args, args.path)
    try:
        if args.thm in ("thm1", "thm4"):
            return _construction(args, sc)
        if args.thm == "thm3":
            model = thm3_bilocal_model(sc)
        elif args.thm == "thm6":
            model = thm6_star_model(sc)
        else:
            model = thm7_fnn_decompose(sc, args.edge)
    except (IncompatibleError, CriterionError) as exc:
        sys.stderr.write(f"criterion failure: {exc}\n")
        return EXIT_CRITERION
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    ok = (
        model.reconstruction_error <= MODEL_TOL
        and model.factorization_error <= FACTOR_TOL
        and model.weights_valid
        and getattr(model, "signalling_error", 0.0) <= MODEL_TOL
    )
    fmt = args.format or "table"
    if fmt == "table":
        sys.stdout.write(model.dump())
    rows = []
    for idx in itertools.product(range(4), repeat=len(model.hidden)):
        r = {h: f"{i:02b}" for h, i in zip(model.hidden, idx)}
        r["weight"] = float(model.weights[idx])
        rows.append(r)
    if fmt == "csv":
        emit(args, rows, list(model.hidden) + ["weight"])
    elif fmt == "json" or args.report:
        summary = {
            "kind": model.kind,
            "hidden": list(model.hidden),
            "weights": rows,
            "reconstruction_error": model.reconstruction_error,
            "factorization_error": model.factorization_error,
            "signalling_error": getattr(model, "signalling_error", None),
            "valid": ok,
        }
        text = _json(summary) + "\n"
        if fmt == "json":
            sys.stdout.write(text)
        if args.report:
            with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    return EXIT_OK if ok else EXIT_CRITERION


def cmd_optimize(args) -> int:
    doc, sc = _load(args, args.path)
    names = {p.name for p in sc.edge_parties()}
    edges: dict[str, EdgeSpec] = {}

    def edge(name):
        if name not in names:
            raise UsageError(f"no edge party named {name!r}")
        return edges.setdefault(name, EdgeSpec())

    for name, plane in _name_value(args.plane, "--plane").items():
        edge(name).plane = plane
    for name, cap in _name_value(args.eta_cap, "--eta-cap").items():
        try:
            edge(name).eta_cap = scenario_io.parse_number(cap)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    for name in args.compatible or []:
        edge(name).constraint = "compatible"
    for name in args.incompatible or []:
        if edge(name).constraint == "compatible":
            raise UsageError(f"{name} cannot be forced both compatible and incompatible")
        edge(name).constraint = "incompatible"
    for name in args.fix or []:
        edge(name).fixed = True
    spec = SearchSpec(sc, edges, grid=args.grid, iterations=args.iterations, tol=args.tol,
                      extended=args.extended, seed=args.seed or 0)
    try:
        result = optimize(spec)
    except InfeasibleError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_CRITERION
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = scenario_io.dumps(result.scenario, header=f"optimised {spec.objective}: lhs {result.lhs!r}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    trace_rows = list(result.trace_rows())
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_csv(trace_rows, ["phase", "step", "lhs"]))
    fmt = args.format or "table"
    if fmt == "csv":
        emit(args, trace_rows, ["phase", "step", "lhs"])
        return EXIT_OK
    row = {"objective": spec.objective, "lhs": result.lhs, "kernel_lhs": result.objective,
           "violated": result.report.violated, "evaluations": result.evaluations}
    for name, pair in result.settings.items():
        ok, margin = is_compatible(pair)
        row[f"{name} margin"] = margin
    if fmt == "json":
        row["scenario"] = text
    emit(args, [row], list(row), extra_text="\n" + text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _u64(s: str) -> int:
    try:
        v = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {s!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--report", metavar="PATH", default=d(None), help="also write a machine-readable report")
    p.add_argument("--format", choices=("table", "csv", "json"), default=d(None), help="output format")
    p.add_argument("--seed", type=_u64, default=d(None), help="random seed (unsigned 64-bit)")
    p.add_argument("--max-n", type=_positive, default=d(MAX_N), help=f"largest network size accepted (default {MAX_N})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlocal", description="Network nonlocality with noisy measurements.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("reproduce", parents=[common], help="run the packaged example scenarios")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("eval", parents=[common], help="evaluate a scenario file")
    p.add_argument("path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", parents=[common], help="sweep a numeric parameter (CSV by default)")
    p.add_argument("path")
    p.add_argument("--vary", action="append", required=True, metavar="PATH=START:STOP:STEPS",
                   help="e.g. source.*.v=0:1:11 or party.A1.eta=0:1:21; repeat for a product grid")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("compat", parents=[common], help="joint measurability of a plane family pair")
    p.add_argument("plane", choices=("xz", "xy"))
    p.add_argument("t", help="angle, e.g. pi/4")
    p.add_argument("eta")
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("audit", parents=[common], help="no-violation audit over random states")
    p.add_argument("thm", choices=sorted(_AUDITS))
    p.add_argument("samples", nargs="?", type=int)
    p.add_argument("seed_pos", nargs="?", type=_u64, metavar="seed")
    p.add_argument("--n", type=_positive, action="append", help="network size (repeatable)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("model", parents=[common], help="explicit local model or violating construction")
    p.add_argument("thm", choices=("thm1", "thm3", "thm4", "thm6", "thm7"))
    p.add_argument("path")
    p.add_argument("--edge", help="edge party to factor out (thm7)")
    p.add_argument("--out", help="write the constructed scenario (thm1, thm4)")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("optimize", parents=[common], help="maximise the functional over edge settings")
    p.add_argument("path")
    p.add_argument("--grid", type=_positive, default=24, help="grid points per angle")
    p.add_argument("--iterations", type=_positive, default=200, help="refinement iterations")
    p.add_argument("--tol", type=float, default=1e-8, help="simplex shrink tolerance")
    p.add_argument("--extended", action="store_true", help="refine over full Bloch directions")
    p.add_argument("--plane", action="append", metavar="NAME=PLANE")
    p.add_argument("--eta-cap", action="append", metavar="NAME=ETA")
    p.add_argument("--compatible", action="append", metavar="NAME", help="force a party jointly measurable")
    p.add_argument("--incompatible", action="append", metavar="NAME", help="force a party incompatible")
    p.add_argument("--fix", action="append", metavar="NAME", help="keep a party's settings from the file")
    p.add_argument("--out", help="write the best scenario here")
    p.add_argument("--trace", help="write the improvement trace CSV here")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_USAGE
    except (UsageError, ScenarioError, InvalidStateError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
