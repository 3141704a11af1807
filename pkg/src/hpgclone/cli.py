"""Command-line interface: ``hpgclone {build,clone,ngram,gen,sweep,trails}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report as rpt
from .cloning import K_SCHEDULES, CloneConfig
from .model import build_first_order, enumerate_trails
from .ngram import EmptyModelError
from .serialize import ModelFormatError, export_dot, export_json, import_json
from .sessions import SessionParseError, count_ngrams, dataset_stats, format_sessions, read_sessions
from .synth import SessionGenConfig, TopologyConfig, generate_sessions, generate_topology, pagerank


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {path}", code=2)
    return p.read_text(encoding="utf-8")


def _sessions(path: str):
    _read_text(path)
    return read_sessions(path)


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _unit(name):
    def conv(text):
        v = float(text)
        if not 0 <= v <= 1:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 1]")
        return v
    return conv


def _float_list(text):
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise argparse.ArgumentTypeError("expected at least one value")
    vals = [float(t) for t in items]
    if any(not 0 <= v <= 1 for v in vals):
        raise argparse.ArgumentTypeError("gamma values must lie in [0, 1]")
    return vals


def _int_list(text):
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise argparse.ArgumentTypeError("expected at least one value")
    return [int(t) for t in items]


def _cutpoint(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("cutpoint must lie in (0, 1]")
    return v


def _emit(report: rpt.StatsReport) -> None:
    print(report.to_json())


def cmd_build(args) -> int:
    log = _sessions(args.sessions)
    _, model, report = rpt.first_order_report(log, args.alpha)
    _write(args.out, export_json(model))
    if args.dot:
        _write(args.dot, export_dot(model))
    _emit(report)
    return 0


def _looks_like_json(path: str) -> bool:
    return _read_text(path).lstrip().startswith("{")


def cmd_clone(args) -> int:
    if _looks_like_json(args.input):
        if not args.sessions:
            raise CliError("cloning a model file needs --sessions to recompute the 3-gram counts", 2)
        log = _sessions(args.sessions)
        model = import_json(_read_text(args.input))
        ngrams = count_ngrams(log)
        if tuple(ngrams.vocab) != model.vocab:
            raise CliError("the session file does not match the model's pages")
        build_ms = 0.0
    else:
        log = _sessions(args.input)
        ngrams, model, first = rpt.first_order_report(log, args.alpha)
        build_ms = first.build_ms
    if any(s.clone for s in model.page_states()):
        raise CliError("input model already contains clones")
    cfg = CloneConfig(gamma=args.gamma, support=args.support, k_schedule=args.k_schedule,
                      seed=args.seed)
    cloned, crep, report = rpt.clone_report(log, model, ngrams, cfg, build_ms)
    _write(args.out, export_json(cloned))
    if args.dot:
        _write(args.dot, export_dot(cloned))
    if args.report_csv:
        _write(args.report_csv, crep.to_csv())
    _emit(report)
    return 0


def cmd_ngram(args) -> int:
    log = _sessions(args.sessions)
    try:
        ngm, report = rpt.ngram_report(log, args.order, args.alpha)
    except EmptyModelError as exc:
        raise CliError(str(exc))
    if args.out:
        _write(args.out, export_json(ngm.model, order=args.order))
    _emit(report)
    return 0


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    topo = generate_topology(TopologyConfig(args.pages), rng)
    scores = pagerank(topo)
    log = generate_sessions(topo, scores, SessionGenConfig(args.sessions, rng_seed=args.seed), rng)
    _write(args.out, format_sessions(log))
    topo_path = args.topology or str(Path(args.out).with_suffix(".topology.csv"))
    _write(topo_path, topo.to_csv())
    out_deg = topo.out_degrees()
    in_deg = topo.in_degrees()
    report = rpt.StatsReport(dataset_stats(log), {}, extra={"topology": {
        "pages": topo.n_pages, "links": len(topo.edges),
        "avg_out_links": float(out_deg.mean()), "stdev_out_links": float(out_deg.std()),
        "avg_in_links": float(in_deg.mean()), "stdev_in_links": float(in_deg.std()),
        "unmatched_out_stubs": topo.unmatched_out, "unmatched_in_stubs": topo.unmatched_in,
    }})
    _emit(report)
    return 0


def cmd_sweep(args) -> int:
    kwargs = dict(support=args.support, k_schedule=args.k_schedule, seed=args.seed,
                  repeats=args.repeats)
    if args.synthetic:
        rows = rpt.synthetic_sweep(args.synthetic, args.gammas, args.orders, **kwargs)
    elif args.sessions:
        log = _sessions(args.sessions)
        rows = rpt.sweep(log, Path(args.sessions).stem, args.gammas, args.orders,
                         alpha=args.alpha, **kwargs)
    else:
        raise CliError("give a session file or --synthetic sizes", 2)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            rpt.write_csv(rows, fh)
    else:
        rpt.write_csv(rows, sys.stdout)
    return 0


def cmd_trails(args) -> int:
    model = import_json(_read_text(args.model))
    trails = enumerate_trails(model, args.cutpoint)
    if args.json:
        print(json.dumps([{"trail": list(t), "probability": p} for t, p in trails], indent=1))
    else:
        for pages, p in trails:
            print(f"{p:.6g}\t{' '.join(pages)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpgclone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a first-order model from a session file")
    p.add_argument("sessions")
    p.add_argument("--alpha", type=_unit("alpha"), default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--dot")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("clone", help="apply dynamic clustering-based cloning")
    p.add_argument("input", help="session file, or model JSON together with --sessions")
    p.add_argument("--sessions")
    p.add_argument("--alpha", type=_unit("alpha"), default=0.0)
    p.add_argument("--gamma", type=_unit("gamma"), default=0.0)
    p.add_argument("--support", type=float, default=30)
    p.add_argument("--k-schedule", choices=K_SCHEDULES, default="square")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dot")
    p.add_argument("--report-csv")
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser("ngram", help="build an N-gram model")
    p.add_argument("sessions")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--alpha", type=_unit("alpha"), default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ngram)

    p = sub.add_parser("gen", help="generate a synthetic topology and session file")
    p.add_argument("--pages", type=int, required=True)
    p.add_argument("--sessions", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--topology", help="edge-list CSV path (default: next to --out)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="state counts and timings across methods")
    p.add_argument("sessions", nargs="?")
    p.add_argument("--synthetic", type=_int_list)
    p.add_argument("--gammas", type=_float_list, default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--orders", type=_int_list, default=[2, 3, 4, 5])
    p.add_argument("--alpha", type=_unit("alpha"), default=0.0)
    p.add_argument("--support", type=float, default=30)
    p.add_argument("--k-schedule", choices=K_SCHEDULES, default="square")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trails", help="list trails above a cut-point")
    p.add_argument("model")
    p.add_argument("--cutpoint", type=_cutpoint, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_trails)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"hpgclone: error: {exc}", file=sys.stderr)
        return exc.code
    except (SessionParseError, ModelFormatError, ValueError, OSError) as exc:
        print(f"hpgclone: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
