"""Batch front-end: parse family specs, run analyses, emit reports.

Exit codes: 0 success, 1 usage/configuration error, 2 computation
finished with a negative mathematical verdict (reducibility, rejection,
budget exhaustion, failed certification); the verdict case still writes
a diagnostic report.  Reports are byte-identical for identical
(config, seed, fixture) triples.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import catalog
from .alignment import align_irreducible, align_multiplicity_free
from .convergence import convergence_report, trace_table
from .envelope import SubvarietySpec, root_of_unity_order_bound, thin_density
from .errors import ConfigError, NegativeVerdict, PadicError
from .families import LIMIT, RepFamily, load_family
from .lattices import find_stable_lattice, lattice_criteria, transfer_lattice
from .reporting import TailPolicy, fmt_val, write_csv, write_report


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(f"argument error: {message}"))


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _verdict(msg: str) -> int:
    print(f"negative verdict: {msg}", file=sys.stderr)
    return 2


def _outdir(args) -> str:
    out = args.out or os.environ.get("PADIC_LIMITS_OUT") or os.getcwd()
    os.makedirs(out, exist_ok=True)
    return out


def _load(spec: str) -> RepFamily:
    if spec.startswith("fixture:"):
        fam, _ = catalog.load_fixture(spec.split(":", 1)[1])
        return fam
    if not os.path.exists(spec):
        raise ConfigError(f"family file not found: {spec}")
    return load_family(spec)


def _parse_range(text: str) -> range:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"bad range {text!r}; expected A..B")
    if hi < lo:
        raise ConfigError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _policy(args) -> TailPolicy:
    from fractions import Fraction

    if getattr(args, "delta_threshold", None) is None:
        return TailPolicy()
    return TailPolicy(threshold=Fraction(args.delta_threshold))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="padic-limits",
                 description="convergence toolkit for p-adic matrix "
                             "representation families")
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="trace-convergence diagnostics")
    pa.add_argument("--family", required=True,
                    help="family JSON path or fixture:NAME")
    pa.add_argument("--ball", type=int, default=3, metavar="L")
    pa.add_argument("--n", default="0..8", metavar="A..B")
    pa.add_argument("--delta-threshold", type=int, default=None)
    pa.add_argument("--out", default=None)
    pa.add_argument("--csv", action="store_true")

    pl = sub.add_parser("align", help="physical-limit alignment pipelines")
    pl.add_argument("--family", required=True)
    pl.add_argument("--ball", type=int, default=3, metavar="L")
    pl.add_argument("--n", default="0..8", metavar="A..B")
    pl.add_argument("--pipeline",
                    choices=("auto", "irreducible", "multiplicity-free"),
                    default="auto")
    pl.add_argument("--dims", default=None,
                    help="declared block dimensions, e.g. 1,1")
    pl.add_argument("--delta-threshold", type=int, default=None)
    pl.add_argument("--out", default=None)
    pl.add_argument("--csv", action="store_true")

    pt = sub.add_parser("lattice", help="stable-lattice search and transfer")
    pt.add_argument("--family", required=True)
    pt.add_argument("--ball", type=int, default=3, metavar="L")
    pt.add_argument("--member", default="limit",
                    help="member index n, or 'limit'")
    pt.add_argument("--transfer", action="store_true")
    pt.add_argument("--n", default="0..8", metavar="A..B")
    pt.add_argument("--max-iter", type=int, default=64)
    pt.add_argument("--out", default=None)

    pd = sub.add_parser("density", help="thin-set density estimation")
    pd.add_argument("--family", required=True)
    pd.add_argument("--subvariety", required=True,
                    help="subvariety JSON path")
    pd.add_argument("--levels", default="1..4", metavar="A..B")
    pd.add_argument("--samples", type=int, default=100_000)
    pd.add_argument("--seed", default="0")
    pd.add_argument("--level", type=int, default=None,
                    help="sampling depth in p-adic digits")
    pd.add_argument("--out", default=None)
    pd.add_argument("--csv", action="store_true")

    pb = sub.add_parser("bound", help="root-of-unity order bounds")
    pb.add_argument("--p", type=int, required=True)
    pb.add_argument("--f", type=int, required=True)
    pb.add_argument("--e", type=int, required=True)
    pb.add_argument("--d", type=int, required=True)
    pb.add_argument("--out", default=None)

    pf = sub.add_parser("fixtures", help="run catalog expectations")
    pf.add_argument("--name", default=None)
    pf.add_argument("--out", default=None)
    return ap


def _cmd_analyze(args) -> int:
    fam = _load(args.family)
    rep = convergence_report(
        trace_table(fam, args.ball, _parse_range(args.n)), _policy(args))
    out = _outdir(args)
    write_report(os.path.join(out, "analyze_report.json"),
                 {"family": fam.name, "report": rep.to_json_dict()})
    if args.csv:
        write_csv(os.path.join(out, "analyze_delta.csv"),
                  ("n", "delta_n"), rep.csv_rows())
    print(f"analyze: uniform_on_ball={rep.uniform_on_ball} "
          f"trace_convergent_on_ball={rep.trace_convergent_on_ball}")
    if not (rep.uniform_on_ball and rep.trace_convergent_on_ball
            and rep.dimension_ok):
        return _verdict("convergence not certified on the ball")
    return 0


def _cmd_align(args) -> int:
    fam = _load(args.family)
    ns = _parse_range(args.n)
    dims = None
    if args.dims:
        dims = tuple(int(x) for x in args.dims.split(","))
    out = _outdir(args)
    policy = _policy(args)
    mode = args.pipeline
    if mode == "auto":
        from .alignment import irreducibility_certificate
        from .errors import NoCertificateError

        try:
            irreducibility_certificate(fam, LIMIT, args.ball)
            mode = "irreducible"
        except NoCertificateError:
            mode = "multiplicity-free"
    try:
        if mode == "irreducible":
            al = align_irreducible(fam, args.ball, ns, policy)
            doc = al.to_json_dict()
        else:
            al = align_multiplicity_free(fam, args.ball, ns, dims, policy)
            doc = al.to_json_dict()
            if args.csv:
                rows = [(n, fmt_val(c), fmt_val(m)) for n, c, m in
                        zip(range(al.n0, ns.stop), al.profile.coercivity,
                            al.plan.margins)]
                write_csv(os.path.join(out, "align_margins.csv"),
                          ("n", "c_n", "m_n"), rows)
    except NegativeVerdict as ex:
        write_report(os.path.join(out, "align_report.json"),
                     {"family": fam.name, "verdict": "rejected",
                      "stage": ex.stage, "detail": str(ex)})
        return _verdict(str(ex))
    write_report(os.path.join(out, "align_report.json"),
                 {"family": fam.name, "verdict": "aligned", "report": doc})
    print(f"align: pipeline={mode} n0={al.n0}")
    return 0


def _cmd_lattice(args) -> int:
    fam = _load(args.family)
    out = _outdir(args)
    idx = LIMIT if args.member == "limit" else int(args.member)
    doc = {"family": fam.name,
           "criteria": lattice_criteria(fam, idx, max(args.ball, 2))
           .to_json_dict()}
    try:
        if args.transfer:
            tr = transfer_lattice(fam, args.ball, _parse_range(args.n),
                                  max_iter=args.max_iter)
            doc["transfer"] = tr.to_json_dict()
            print(f"lattice: transfer N0={tr.N0}")
        else:
            lb = find_stable_lattice(fam, idx, args.ball, args.max_iter)
            doc["lattice"] = lb.to_json_dict()
            print(f"lattice: smith={list(lb.smith_invariants)} "
                  f"certificate={lb.stability_certificate}")
    except NegativeVerdict as ex:
        doc["verdict"] = "negative"
        doc["stage"] = ex.stage
        doc["detail"] = str(ex)
        write_report(os.path.join(out, "lattice_report.json"), doc)
        return _verdict(f"[{ex.stage}] {ex}")
    write_report(os.path.join(out, "lattice_report.json"), doc)
    return 0


def _cmd_density(args) -> int:
    fam = _load(args.family)
    with open(args.subvariety, "r", encoding="utf-8") as fh:
        X = SubvarietySpec.from_json_dict(json.load(fh))
    ms = list(_parse_range(args.levels))
    est = thin_density(fam, X, ms, args.samples, args.seed, args.level)
    out = _outdir(args)
    write_report(os.path.join(out, "density_report.json"),
                 {"family": fam.name, "polys": list(X.texts),
                  "estimates": [d.to_json_dict() for d in est]})
    if args.csv:
        rows = []
        for d in est:
            lo, hi = d.wilson
            rows.append((d.m, d.samples, d.hits, repr(d.estimate),
                         repr(lo), repr(hi)))
        write_csv(os.path.join(out, "density.csv"),
                  ("m", "samples", "hits", "estimate", "ci_lo", "ci_hi"),
                  rows)
    for d in est:
        print(f"density: m={d.m} estimate={d.estimate:.6g} "
              f"undecidable={d.undecidable}")
    if any(d.undecidable for d in est):
        return _verdict("precision-undecidable samples present; "
                        "raise the sampling level or precision")
    return 0


def _cmd_bound(args) -> int:
    b = root_of_unity_order_bound(args.p, args.f, args.e, args.d)
    print(f"prime-to-p {b.prime_to_p_bound}, p-power {b.p_power_bound}")
    if args.out:
        out = _outdir(args)
        write_report(os.path.join(out, "bound_report.json"),
                     b.to_json_dict())
    return 0


def _cmd_fixtures(args) -> int:
    names = [args.name] if args.name else catalog.fixture_names()
    rows = []
    failed = False
    for name in names:
        for check, ok, detail in catalog.check_fixture(name):
            rows.append({"fixture": name, "check": check, "passed": ok,
                         "detail": detail})
            failed = failed or not ok
            print(f"[{'PASS' if ok else 'FAIL'}] {name}.{check}: {detail}")
    if args.out:
        write_report(os.path.join(_outdir(args), "fixtures_report.json"),
                     {"results": rows})
    return 2 if failed else 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "align": _cmd_align,
    "lattice": _cmd_lattice,
    "density": _cmd_density,
    "bound": _cmd_bound,
    "fixtures": _cmd_fixtures,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except NegativeVerdict as ex:
        return _verdict(str(ex))
    except (PadicError, OSError, json.JSONDecodeError) as ex:
        return _fail(str(ex))


def main_entry() -> None:
    raise SystemExit(main())
