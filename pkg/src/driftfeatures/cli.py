"""
Command-line entry point: ``generate``, ``analyze``, ``benchmark`` and ``evaluate``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .core import DataError, load_csv, load_labels, load_report
from .evalbench import (
    METHODS,
    TABLE1_EDGE_PROB,
    TABLE1_MAX_ATTEMPTS,
    benchmark,
    format_table,
    rows_to_json,
    run_method,
    score,
    table1_specs,
)
from .synth import GenerationError, NetworkSpec, generate_network, sample, write_benchmark

log = logging.getLogger("driftfeatures")


class UsageError(Exception):
    """Bad flag values detected after parsing."""


def _default_threads() -> int:
    env = os.environ.get("DFA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _counts(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected I,F,N integers, got {text!r}") from None
    if len(vals) != 3 or min(vals) < 0:
        raise argparse.ArgumentTypeError(f"expected three non-negative integers I,F,N, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: DFA_THREADS or all cores)")
    common.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="driftfeatures", parents=[common],
                                description="Find and categorize drifting features in tabular data.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="draw a ground-truth benchmark dataset")
    g.add_argument("--features", type=int, default=25)
    g.add_argument("--edge-prob", type=float, default=None,
                   help="edge probability (default 0.15, or 0.07 when --counts is given)")
    g.add_argument("--samples", type=int, default=10_000)
    g.add_argument("--counts", type=_counts, default=None, help="target category counts I,F,N")
    g.add_argument("--max-attempts", type=int, default=None)
    g.add_argument("--out-prefix", default="benchmark")

    a = sub.add_parser("analyze", parents=[common], help="categorize the features of a CSV file")
    a.add_argument("--input", required=True)
    tg = a.add_mutually_exclusive_group()
    tg.add_argument("--time-column", default=None)
    tg.add_argument("--time-equidistant", action="store_true",
                    help="use equidistant time over the row order (default)")
    a.add_argument("--method", choices=METHODS, default="statistical")
    a.add_argument("--alpha", type=float, default=0.01)
    a.add_argument("--epsilon-mult", type=float, default=2.0)
    a.add_argument("--out", default="-", help="report path or '-' for stdout")

    b = sub.add_parser("benchmark", parents=[common], help="repeated generate/analyze/score table")
    sg = b.add_mutually_exclusive_group(required=True)
    sg.add_argument("--specs", default=None, help="JSON list of network specs")
    sg.add_argument("--table1", action="store_true", help="built-in six-row preset")
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--methods", default=",".join(METHODS), help="comma-separated subset of " + ",".join(METHODS))
    b.add_argument("--samples", type=int, default=None, help="override rows per dataset")
    b.add_argument("--out", default="benchmark.json")

    e = sub.add_parser("evaluate", parents=[common], help="score a report against labels")
    e.add_argument("--report", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--out", default="-")
    return p


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def cmd_generate(args) -> int:
    kw = {}
    edge_prob = 0.15 if args.edge_prob is None else args.edge_prob
    if args.counts is not None:
        # count mixes with a small drifting component are rare at the default density
        edge_prob = TABLE1_EDGE_PROB if args.edge_prob is None else args.edge_prob
        kw["max_attempts"] = TABLE1_MAX_ATTEMPTS
    if args.max_attempts is not None:
        kw["max_attempts"] = args.max_attempts
    try:
        spec = NetworkSpec(args.features, edge_prob=edge_prob, n_samples=args.samples, seed=args.seed,
                           target_counts=args.counts, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    net = generate_network(spec)
    smp = sample(net, spec.n_samples, args.seed)
    paths = write_benchmark(net, smp, args.out_prefix)
    if smp.clipped:
        log.warning("%d sampled values were clipped", smp.clipped)
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    return 0


def cmd_analyze(args) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if args.epsilon_mult < 0:
        raise UsageError("--epsilon-mult must be non-negative")
    ds = load_csv(args.input, args.time_column)
    report = run_method(ds, args.method, args.seed, args.threads, args.alpha, args.epsilon_mult)
    log.info("%s finished in %.1f s", args.method, report.runtime_seconds)
    _emit(report.to_json(indent=2), args.out)
    return 0


def cmd_benchmark(args) -> int:
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    if args.table1:
        specs = table1_specs(args.seed)
    else:
        with open(args.specs, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, list):
            raise DataError("--specs must hold a JSON list of network specs")
        specs = [NetworkSpec.from_dict(r) for r in raw]
    if args.samples is not None:
        specs = [replace(s, n_samples=args.samples) for s in specs]
    rows = benchmark(specs, methods, args.runs, args.seed, args.threads, log=log.info)
    print(format_table(rows))
    _emit(rows_to_json(rows), args.out)
    return 0


def cmd_evaluate(args) -> int:
    report = load_report(args.report)
    truth = load_labels(args.labels)
    sc = score(report.categories(), truth)
    _emit(json.dumps(sc.to_dict(), indent=2), args.out)
    return 0


COMMANDS = {"generate": cmd_generate, "analyze": cmd_analyze, "benchmark": cmd_benchmark, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.threads is None:
        args.threads = _default_threads()
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, GenerationError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
