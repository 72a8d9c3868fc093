"""Command line interface.

Subcommands: precompute (complexity cache), synth (synthetic streams),
run (process a stream into a trace), eval (Benefit-FAR/AUC from traces),
plot-data (trace projections for plotting).

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .complexity import ComplexityCache, ComplexityConfig, build_cache
from .datagen import ArStreamConfig, GmmStreamConfig, gen_ar_stream, gen_gmm_stream
from .errors import ConfigError, DataFormatError, NumericError
from .evaluation import EvalConfig, evaluate_trace_scores
from .pipeline import run_stream
from .stream_io import (
    DEFAULT_DETECTORS,
    Annotations,
    RunConfig,
    read_batch_stream,
    read_trace,
    trace_to_alarms_csv,
    trace_to_ddim_csv,
    trace_to_scores_csv,
    write_batch_stream,
    write_trace,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ddimstream")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="tabulate the GMM complexity cache")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic stream with annotations")
    p.add_argument("family", choices=["gmm", "ar"])
    p.add_argument("--config", help="JSON file with generator parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="stream CSV path; annotations go to <out>.ann.json")

    p = sub.add_parser("run", help="process a stream into a trace")
    p.add_argument("--family", choices=["gmm", "ar"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--cache", help="complexity cache path (gmm family)")
    p.add_argument("--detectors", default=",".join(DEFAULT_DETECTORS))
    p.add_argument("--out", required=True)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--assign-mode", choices=["sample", "map"], default="sample")
    p.add_argument("--em-restarts", type=int, default=5)
    p.add_argument("--window", type=int, help="AR coding window (default: batch size)")

    p = sub.add_parser("eval", help="Benefit-FAR curves and AUC for one or more traces")
    p.add_argument("--trace", action="append", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--U", type=int, default=10)
    p.add_argument("--out", required=True, help="per-run JSON; with multiple traces an aggregate CSV is written to <out>.csv")

    p = sub.add_parser("plot-data", help="export plot-friendly CSV projections of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--series", choices=["ddim", "scores", "alarms"], required=True)
    p.add_argument("--out", required=True)
    return parser


def _cmd_precompute(args) -> int:
    config = ComplexityConfig(m=args.m, R=args.R, eps=args.eps, n_max=args.n_max, k_max=args.k_max)
    build_cache(config).save(args.out)
    return EXIT_OK


def _cmd_synth(args) -> int:
    params = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            params = json.load(fh)
    params["seed"] = args.seed
    if args.family == "gmm":
        batches, ann = gen_gmm_stream(GmmStreamConfig(**params))
    else:
        if "coeffs_before" in params:
            params["coeffs_before"] = tuple(params["coeffs_before"])
        if "coeffs_after" in params:
            params["coeffs_after"] = tuple(params["coeffs_after"])
        batches, ann = gen_ar_stream(ArStreamConfig(**params))
    write_batch_stream(batches, args.out)
    ann.save(str(args.out) + ".ann.json")
    return EXIT_OK


def _cmd_run(args) -> int:
    batches = read_batch_stream(args.input)
    cache = ComplexityCache.load(args.cache) if args.cache else None
    config = RunConfig(
        family=args.family,
        k_max=args.k_max,
        seed=args.seed,
        detectors=tuple(args.detectors.split(",")),
        lam=args.lam,
        assign_mode=args.assign_mode,
        em_restarts=args.em_restarts,
        window=args.window,
        cache_path=args.cache,
    )
    records = run_stream(batches, config, cache=cache)
    write_trace(records, args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    ann = Annotations.load(args.annotations)
    config = EvalConfig(sign_times=ann.sign_times, transitions=ann.transitions, U=args.U)
    per_trial = []
    for path in args.trace:
        records = read_trace(path)
        per_trial.append(evaluate_trace_scores(records, config))
    first = per_trial[0]
    payload = {
        "U": args.U,
        "traces": args.trace,
        "detectors": {
            name: {"auc": curve.auc, "curve": curve.points}
            for name, curve in first.items()
        },
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    if len(per_trial) > 1:
        names = sorted(first)
        with open(str(args.out) + ".csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trace"] + names)
            for path, trial in zip(args.trace, per_trial):
                writer.writerow([path] + [repr(trial[n].auc) for n in names])
    return EXIT_OK


def _cmd_plot_data(args) -> int:
    records = read_trace(args.trace)
    if args.series == "ddim":
        trace_to_ddim_csv(records, args.out)
    elif args.series == "scores":
        trace_to_scores_csv(records, args.out)
    else:
        trace_to_alarms_csv(records, args.out)
    return EXIT_OK


_COMMANDS = {
    "precompute": _cmd_precompute,
    "synth": _cmd_synth,
    "run": _cmd_run,
    "eval": _cmd_eval,
    "plot-data": _cmd_plot_data,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (DataFormatError, ConfigError, FileNotFoundError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
