"""``gtsp-lk`` command line: solve, convert, bench and oracle-check."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .bench import ManifestError, load_manifest, run_manifest
from .instance import cluster_tsp, read_instance, write_instance
from .lk import SolverConfig, Variation, lk_run
from .local_search import AdaptationOption, nearest_neighbour, three_opt, two_opt
from .oracles import SUITES, run_suites
from .tour import InfeasibleTourError, Tour, check_feasible, format_tour, weight_of_tour
from .validation import parse_run_list

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4


def _int_in(lo, hi=None):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            rng = f"{lo}..{hi}" if hi is not None else f">= {lo}"
            raise argparse.ArgumentTypeError(f"must be in {rng}, got {v}")
        return v
    return conv


def _run_list(text):
    try:
        return parse_run_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _solve_one(args, instance, r) -> Tour:
    start = nearest_neighbour(instance, r)
    if args.heuristic == "nn":
        return start
    if args.heuristic == "2opt":
        return two_opt(instance, start, AdaptationOption(args.option))
    if args.heuristic == "3opt":
        return three_opt(instance, start, AdaptationOption(args.option))
    config = SolverConfig(Variation.parse(args.variation), args.gain, args.alpha, args.co)
    return lk_run(instance, start, config)


def _label(args) -> str:
    if args.heuristic == "nn":
        return "NN"
    if args.heuristic in ("2opt", "3opt"):
        return f"{args.heuristic}-{AdaptationOption(args.option).suffix}"
    return SolverConfig(Variation.parse(args.variation), args.gain, args.alpha, args.co).label


def cmd_solve(args, parser) -> int:
    try:
        instance = read_instance(args.instance)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {args.instance}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    runs = args.seed_list or [args.start or 1]
    bad = [r for r in runs if not 1 <= r <= instance.m]
    if bad:
        parser.error(f"run numbers must be in 1..{instance.m}, got {bad}")
    if args.heuristic != "nn" and not instance.symmetric and not (
            args.heuristic == "lk" and args.variation == "exact"):
        parser.error("this heuristic needs a symmetric instance; use --heuristic lk "
                     "--variation exact")
    results = []
    for r in runs:
        t0 = time.perf_counter()
        tour = _solve_one(args, instance, r)
        elapsed = (time.perf_counter() - t0) * 1000.0
        try:
            check_feasible(instance, tour.vertices)
            if weight_of_tour(instance, tour.vertices) != tour.weight:
                raise InfeasibleTourError(f"cached weight {tour.weight} is stale")
        except InfeasibleTourError as exc:
            print(f"error: solver returned an invalid tour: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        results.append((r, tour, elapsed))

    if args.format == "json":
        doc = {"instance": instance.name, "heuristic": _label(args), "runs": [
            {"start": r, "tour": [v + 1 for v in tour.vertices], "weight": tour.weight,
             "elapsed_ms": round(ms, 3)} for r, tour, ms in results]}
        print(json.dumps(doc, indent=2))
    else:
        for r, tour, ms in results:
            if len(results) > 1:
                print(f"run: {r}")
            sys.stdout.write(format_tour(tour))
            print(f"elapsed_ms: {ms:.3f}")
    return EXIT_OK


def cmd_convert(args, parser) -> int:
    try:
        tsp = read_instance(args.tsp)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {args.tsp}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        gtsp = cluster_tsp(tsp, args.sets)
    except ValueError as exc:
        parser.error(str(exc))
    out = args.out
    if os.path.isdir(out) or out.endswith(os.sep):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, f"{gtsp.name}.gtsp")
    write_instance(gtsp, out)
    print(out)
    return EXIT_OK


def cmd_bench(args, parser) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except OSError as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    written = run_manifest(manifest, args.out)
    for path in written.values():
        print(path)
    return EXIT_OK


def cmd_oracle_check(args, parser) -> int:
    results = run_suites(args.suite, args.trials, args.seed, args.dump_dir)
    ok = True
    for res in results:
        print(res.summary())
        for miss in res.mismatches:
            ok = False
            where = f" (instance written to {miss.path})" if miss.path else ""
            print(f"  trial {miss.trial}: {miss.detail}{where}")
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtsp-lk",
                                     description="GTSP heuristics and benchmark harness.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve", help="run one heuristic on one instance")
    p.add_argument("--instance", required=True, help="GTSP file")
    p.add_argument("--heuristic", choices=["nn", "2opt", "3opt", "lk"], default="lk")
    p.add_argument("--variation", choices=[v.value for v in Variation], default="shortest")
    p.add_argument("--gain", type=_int_in(1, 5), default=5, help="gain acceptance option")
    p.add_argument("--alpha", type=_int_in(1), default=2, help="backtracking depth")
    p.add_argument("--co", action="store_true", help="cluster optimization after improvements")
    p.add_argument("--option", type=_int_in(1, 5), default=2,
                   help="2opt/3opt adaptation option")
    runs = p.add_mutually_exclusive_group()
    runs.add_argument("--start", type=_int_in(1), default=None,
                      help="run number r: construction starts in cluster r")
    runs.add_argument("--seed-list", type=_run_list, default=None,
                      help='several run numbers, e.g. "1..10" or "1,4,7"')
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(handler=cmd_solve, subparser=p)

    p = sub.add_parser("convert", help="cluster a TSPLIB file into a GTSP file")
    p.add_argument("--tsp", required=True, help="TSPLIB file")
    p.add_argument("--sets", type=int, default=None, help="cluster count (default ceil(n/5))")
    p.add_argument("--out", required=True, help="output file, or directory for <m><name>.gtsp")
    p.set_defaults(handler=cmd_convert, subparser=p)

    p = sub.add_parser("bench", help="run a benchmark manifest")
    p.add_argument("--manifest", required=True, help="JSON manifest")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(handler=cmd_bench, subparser=p)

    p = sub.add_parser("oracle-check", help="randomized checks against exhaustive oracles")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--trials", type=_int_in(0), default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-dir", default="oracle-failures",
                   help="where shrunk failing instances are written")
    p.set_defaults(handler=cmd_oracle_check, subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.handler(args, args.subparser)


if __name__ == "__main__":
    sys.exit(main())
