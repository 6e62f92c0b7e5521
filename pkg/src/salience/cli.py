"""Command-line entry point (``salience``)."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys

import numpy as np

from . import bench, gadgets, io, oracles
from .control import (
    EnumerationCapExceeded,
    Verdict,
    majority_control,
    max_support,
    stochastic_linear_max,
)
from .election import ElectionError, IntervalBox, LinearModel, NormBudget

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAP = 4
EXIT_INFEASIBLE = 5
EXIT_VERIFY = 6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, instance=True):
    if instance:
        p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--epsilon", type=float, default=1e-6, help="slack for p outside {1, 2, inf}")
    p.add_argument("--resolution", type=float, default=1 / 200, help="grid step (oracles)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--parallel", type=int, default=1, help="worker processes for enumeration")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="salience", description="Issue-weight election control solvers.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("max-support", "majority", "stochastic"):
        _common(sub.add_parser(name, help=f"solve the {name} attack"))

    g = sub.add_parser("gadget", help="generate a reduction instance")
    gsub = g.add_subparsers(dest="gadget", required=True, parser_class=_Parser)
    for name in ("tcwms", "tcwp", "theta-l"):
        gp = gsub.add_parser(name)
        gp.add_argument("--nprime", type=int, required=True)
        gp.add_argument("--ellprime", type=int, required=True)
        _common(gp, instance=False)
    gp = gsub.add_parser("max2sat")
    gp.add_argument("--vars", type=int, required=True)
    gp.add_argument("--clauses", type=int, required=True)
    gp.add_argument("--beta1", type=float)
    gp.add_argument("--beta2", type=float)
    gp.add_argument("--alpha", type=float)
    _common(gp, instance=False)

    o = sub.add_parser("oracle", help="run a brute-force oracle")
    osub = o.add_subparsers(dest="oracle", required=True, parser_class=_Parser)
    for name in ("grid", "structured"):
        op = osub.add_parser(name)
        op.add_argument("--objective", choices=oracles.OBJECTIVES, default="max_support")
        _common(op)
    _common(osub.add_parser("pgd"))

    v = sub.add_parser("verify", help="re-certify a solution file")
    v.add_argument("solution")

    b = sub.add_parser("bench", help="CSV timing rows over a suite")
    b.add_argument("--problem", choices=bench.PROBLEMS, default="max-support")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--instance", action="append", default=[], help="instance file(s); default is a random suite")
    b.add_argument("--omit-timing", action="store_true", help="write 'omitted' instead of wall times")
    _common(b, instance=False)
    return ap


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(fields, rows) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _load(args):
    with open(args.instance, encoding="utf-8") as fh:
        text = fh.read()
    return io.loads_instance(text)


def _solve(args) -> int:
    parsed = _load(args)
    idoc = io.instance_doc(parsed.instance, parsed.constraint, parsed.model, parsed.metadata)
    inst, constraint = parsed.instance, parsed.constraint
    kind = args.command.replace("-", "_")
    if args.command == "max-support":
        sol = max_support(inst, constraint, args.epsilon, parallel=args.parallel)
    elif args.command == "majority":
        sol = majority_control(inst, constraint, args.epsilon, parallel=args.parallel)
    else:
        if not isinstance(parsed.model, LinearModel):
            print("stochastic: the instance needs a linear stochastic model", file=sys.stderr)
            return EXIT_PARSE
        sol = stochastic_linear_max(inst, parsed.model, constraint, args.epsilon)
    doc = io.solution_doc(kind, idoc, sol, args.epsilon)
    if args.format == "csv":
        row = {"kind": kind, "x": " ".join(repr(v) for v in (doc["x"] or []))}
        row.update({k: v for k, v in doc["objective"].items()})
        _emit(args, _csv_text(list(row), [row]))
    else:
        _emit(args, io.dumps(doc))
    if sol.verdict is Verdict.NO_WIN:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _gadget(args) -> int:
    try:
        return _build_gadget(args)
    except ElectionError as exc:
        print(f"gadget: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _build_gadget(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.gadget == "max2sat":
        phi = gadgets.Max2SatFormula.random(args.vars, args.clauses, rng)
        g = gadgets.build_max2sat_gadget(phi, args.beta1, args.beta2, args.alpha)
        meta = {
            "formula": [[list(l) for l in c] for c in phi.clauses],
            "n_vars": phi.n_vars,
            "beta1": g.beta1,
            "beta2": g.beta2,
            "agreement_gap": g.agreement_gap,
        }
        doc = io.instance_doc(g.instance, NormBudget(1.0, math.inf), g.model, meta)
    else:
        t = gadgets.TcmsInstance.random(args.nprime, args.ellprime, rng)
        build = {
            "tcwms": gadgets.build_tcwms_gadget,
            "tcwp": gadgets.build_tcwp_gadget,
            "theta-l": gadgets.build_theta_l_gadget,
        }[args.gadget]
        inst = build(t)
        meta = {"tcms_voters": t.voters.tolist()}
        doc = io.instance_doc(inst, IntervalBox.full(inst.ell), None, meta)
    _emit(args, io.dumps(doc))
    return EXIT_OK


def _oracle(args) -> int:
    parsed = _load(args)
    inst = parsed.instance
    if args.oracle == "grid":
        r = oracles.grid_search(inst, parsed.constraint, args.objective, args.resolution, parsed.model)
        out = {"value": r.value, "w": None if r.w is None else r.w.tolist(), "scanned": r.scanned, "feasible": r.feasible}
    elif args.oracle == "structured":
        r = oracles.structured_weight_search(inst, args.objective, parsed.model, parsed.constraint)
        out = {"value": r.value, "w": None if r.w is None else r.w.tolist(), "scanned": r.scanned, "feasible": r.feasible}
    else:
        if not isinstance(parsed.model, LinearModel) or not isinstance(parsed.constraint, NormBudget):
            print("oracle pgd: needs a linear model and a budget constraint", file=sys.stderr)
            return EXIT_PARSE
        r = oracles.projected_gradient_oracle(inst, parsed.model, parsed.constraint)
        out = {"value": r.value, "x": r.x.tolist(), "iterations": r.iterations, "converged": r.converged}
    if args.format == "csv":
        row = {k: (json.dumps(v) if isinstance(v, list) else v) for k, v in out.items()}
        _emit(args, _csv_text(list(row), [row]))
    else:
        _emit(args, io.dumps(out))
    return EXIT_OK


def _verify(args) -> int:
    try:
        with open(args.solution, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise io.ParseError(io.E_SYNTAX, exc.msg, exc.lineno) from None
    report = io.verify_solution(doc)
    for msg in report.messages:
        print(msg, file=sys.stderr)
    print("ok" if report.ok else "FAILED")
    return EXIT_OK if report.ok else EXIT_VERIFY


def _bench(args) -> int:
    if args.instance:
        cases = []
        for path in args.instance:
            parsed = io.load_instance(path)
            cases.append(bench.Case(path, parsed.instance, parsed.constraint, parsed.model))
    else:
        cases = bench.random_suite(args.seed, args.count, args.problem)
    rows = bench.bench_rows(cases, args.problem, args.epsilon, args.parallel, args.omit_timing)
    _emit(args, _csv_text(bench.CSV_FIELDS, rows))
    return EXIT_OK


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    handlers = {
        "max-support": _solve,
        "majority": _solve,
        "stochastic": _solve,
        "gadget": _gadget,
        "oracle": _oracle,
        "verify": _verify,
        "bench": _bench,
    }
    try:
        return handlers[args.command](args)
    except io.ParseError as exc:
        print(exc, file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (EnumerationCapExceeded, oracles.OracleCapExceeded) as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ElectionError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
