"""Command-line front end: ``diffsearch analyze|curve|pea|compare|batch``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .amplification import modified_search, original_search
from .analysis import prediction_report, report_csv, summarize
from .errors import NumericalError, SpecError
from .pea import (
    MAX_AMPLITUDES,
    TAPERS,
    PEAConfig,
    PhaseInversionCircuit,
    inversion_report,
    pea_sweep,
    required_ancillas,
    sweep_csv,
)
from .scenarios import builtin_scenarios, load_scenario
from .search import default_q_max, success_curve
from .spectrum import build_diffusion

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULT_EPSILON = 0.05
CURVE_CAP = 200_000


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _scenario(args):
    refs = [r for r in (args.scenario, args.scenario_opt, args.spec) if r is not None]
    if len(refs) != 1:
        raise SpecError("give exactly one scenario (positional, --scenario or --spec)")
    sc = load_scenario(refs[0])
    if args.seed is not None:
        sc = dataclasses.replace(sc, spec=dataclasses.replace(sc.spec, seed=args.seed))
    if getattr(args, "phi", None) is not None:
        sc = dataclasses.replace(sc, phi=args.phi)
    return sc


# -- command bodies: each returns {filename: text} -----------------------------


def run_analyze(sc, fmt, report=False, q_max=None):
    D, eig = build_diffusion(sc.spec)
    if report or fmt == "csv":
        summary, rows = prediction_report(D, eig, sc.spec, sc.phi, q_max)
    else:
        summary, rows = summarize(eig, sc.phi), None
    if fmt == "csv":
        return {f"{sc.name}.report.csv": report_csv(rows)}
    out = {"scenario": sc.name, "spec": sc.spec.to_dict(), "phi": sc.phi, "summary": summary.to_dict()}
    if rows is not None:
        keys = ("quantity", "predicted", "numeric", "abs_residual", "rel_residual")
        out["report"] = [dict(zip(keys, r)) for r in rows]
    return {f"{sc.name}.analyze.json": _dumps(out)}


def run_curve(sc, fmt, q_max=None):
    D, eig = build_diffusion(sc.spec)
    if q_max is None:
        if math.isclose(math.cos(sc.phi), 1.0):
            # no selective phase: the curve is flat, any window shows it
            q_max = min(default_q_max(1.0, sc.spec.alpha), CURVE_CAP)
        else:
            s = summarize(eig, sc.phi)
            q_max = min(default_q_max(s.B, s.alpha), CURVE_CAP)
    curve = success_curve(D, sc.spec.target, sc.phi, sc.spec.source_state(), q_max)
    if fmt == "csv":
        return {f"{sc.name}.curve.csv": curve.to_csv()}
    body = {"scenario": sc.name, "q": list(range(len(curve))), "probability": curve.probability.tolist()}
    return {f"{sc.name}.curve.json": _dumps(body)}


def _parse_sweep(text):
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise SpecError(f"--sweep expects b0:b1, got {text!r}") from exc
    if lo < 1 or hi < lo:
        raise SpecError(f"--sweep range {text!r} is empty or starts below 1")
    return range(lo, hi + 1)


def run_pea(sc, fmt, bits=None, sweep=None, epsilon=None, taper="kaiser", max_amplitudes=MAX_AMPLITUDES):
    D, eig = build_diffusion(sc.spec)
    tmin = sc.spec.theta_min
    if sweep is not None:
        rows = pea_sweep(D, sc.spec.source_state(), tmin, _parse_sweep(sweep), taper, eig, max_amplitudes)
    else:
        eps = epsilon if epsilon is not None else (sc.epsilon or DEFAULT_EPSILON)
        b = bits if bits is not None else required_ancillas(tmin, eps, taper)[0]
        W = PhaseInversionCircuit(D, PEAConfig(b, tmin, eps, taper, max_amplitudes))
        rep = inversion_report(W, sc.spec.source_state(), eig)
        rows = [(b, rep.queries, rep.worst_error, rep.leakage)]
    if fmt == "csv":
        return {f"{sc.name}.pea.csv": sweep_csv(rows)}
    keys = ("b", "queries", "worst_error", "leakage")
    return {f"{sc.name}.pea.json": _dumps([dict(zip(keys, (int(r[0]), int(r[1]), float(r[2]), float(r[3])))) for r in rows])}


def run_compare(sc, fmt, mode="pea", epsilon=None, refine=False, taper="kaiser"):
    D, eig = build_diffusion(sc.spec)
    eps = epsilon if epsilon is not None else sc.epsilon
    orig = original_search(sc.spec, sc.phi, D=D, eig=eig)
    mod = modified_search(sc.spec, sc.phi, eps, mode, taper, refine, D=D, eig=eig)
    if fmt == "csv":
        d1, d2 = orig.to_dict(), mod.to_dict()
        keys = [k for k in d1 if k != "verdict"]
        rows = [[d[k] for k in keys] for d in (d1, d2)]
        return {f"{sc.name}.compare.csv": _table(keys, rows)}
    body = {"scenario": sc.name, "phi": sc.phi, "original": orig.to_dict(), "modified": mod.to_dict()}
    return {f"{sc.name}.compare.json": _dumps(body)}


def _batch_one(job):
    ref, seed, fmt = job
    sc = load_scenario(ref)
    if seed is not None:
        sc = dataclasses.replace(sc, spec=dataclasses.replace(sc.spec, seed=seed))
    out = {}
    out.update(run_analyze(sc, fmt, report=True))
    out.update(run_curve(sc, fmt))
    out.update(run_pea(sc, fmt))
    out.update(run_compare(sc, fmt))
    return out


def run_batch(refs, seed, fmt, jobs=1):
    refs = list(refs) or list(builtin_scenarios())
    work = [(r, seed, fmt) for r in refs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_batch_one, work))
    else:
        parts = [_batch_one(w) for w in work]
    out = {}
    for p in parts:
        out.update(p)
    return out


# -- argument handling ---------------------------------------------------------


def build_parser():
    def common(suppress):
        # global flags work before or after the subcommand; SUPPRESS keeps the
        # subcommand copy from overwriting a value given up front
        c = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        c.add_argument("--seed", type=int, default=d(None), help="override the scenario seed")
        c.add_argument("--out-dir", type=Path, default=d(None), help="write files here instead of stdout")
        c.add_argument("--format", choices=("json", "csv"), default=d("json"))
        return c

    p = argparse.ArgumentParser(
        prog="diffsearch", description="Generalized Grover search with arbitrary diffusion.", parents=[common(False)]
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub_common = common(True)

    def scen(sp):
        sp.add_argument("scenario", nargs="?", help="built-in name or path to a scenario/spec JSON file")
        sp.add_argument("--scenario", dest="scenario_opt", default=None, help="built-in scenario name")
        sp.add_argument("--spec", default=None, type=str, help="path to a scenario or spec JSON file")
        sp.add_argument("--phi", type=float, default=None, help="override the selective phase")

    a = sub.add_parser("analyze", parents=[sub_common], help="theory scalars for a scenario")
    scen(a)
    a.add_argument("--report", action="store_true", help="include predicted-vs-numeric residuals")
    a.add_argument("--q-max", type=int, default=None)

    c = sub.add_parser("curve", parents=[sub_common], help="success probability against q")
    scen(c)
    c.add_argument("--q-max", type=int, default=None)

    e = sub.add_parser("pea", parents=[sub_common], help="phase-estimation inversion error and cost")
    scen(e)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--bits", type=int, default=None)
    g.add_argument("--sweep", default=None, metavar="B0:B1")
    e.add_argument("--epsilon", type=float, default=None)
    e.add_argument("--taper", choices=TAPERS, default="kaiser")
    e.add_argument("--max-amplitudes", type=int, default=MAX_AMPLITUDES)

    m = sub.add_parser("compare", parents=[sub_common], help="original search against amplified search")
    scen(m)
    m.add_argument("--mode", choices=("pea", "exact"), default="pea", help="how I_s is realized")
    m.add_argument("--epsilon", type=float, default=None, help="per-call I_s error (default beta/10)")
    m.add_argument("--refine", action="store_true", help="search q_m-2..q_m+2 for the best prefix")
    m.add_argument("--taper", choices=TAPERS, default="kaiser")

    b = sub.add_parser("batch", parents=[sub_common], help="run every command over several scenarios")
    b.add_argument("scenarios", nargs="*", help="defaults to all built-ins")
    b.add_argument("--jobs", type=int, default=1)
    return p


def dispatch(args):
    fmt = args.format
    if args.command == "batch":
        return run_batch(args.scenarios, args.seed, fmt, args.jobs)
    sc = _scenario(args)
    if args.command == "analyze":
        return run_analyze(sc, fmt, args.report, args.q_max)
    if args.command == "curve":
        return run_curve(sc, fmt, args.q_max)
    if args.command == "pea":
        if args.epsilon is not None and not 0.0 < args.epsilon < 1.0:
            raise SpecError("--epsilon must lie in (0, 1)")
        return run_pea(sc, fmt, args.bits, args.sweep, args.epsilon, args.taper, args.max_amplitudes)
    if args.command == "compare":
        if args.epsilon is not None and not 0.0 < args.epsilon < 1.0:
            raise SpecError("--epsilon must lie in (0, 1)")
        return run_compare(sc, fmt, args.mode, args.epsilon, args.refine, args.taper)
    raise SpecError(f"unknown command {args.command!r}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        files = dispatch(args)
    except SpecError as exc:
        print(f"diffsearch: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"diffsearch: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out_dir is None:
        for name in sorted(files):
            if len(files) > 1:
                sys.stdout.write(f"# {name}\n")
            sys.stdout.write(files[name])
    else:
        for name in sorted(files):
            write_atomic(args.out_dir / name, files[name])
            print(args.out_dir / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
