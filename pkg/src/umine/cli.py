"""``umine`` command line.

Exit codes: 0 success (a timed-out run is still a recorded success),
1 usage error, 2 I/O error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import bench
from .datagen import SynthSpec, generate_synthetic, scenario
from .oracle import OracleSizeError, brute_force_approx, brute_force_mine
from .udb import (FormatError, MiningParams, ParameterError, assign_gaussian, assign_zipf,
                  read_any, serialize_fimi, serialize_udb)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("UMINE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise bench.UsageError(f"UMINE_SEED must be an integer, got {env!r}") from None


def _params(args, defaults=None) -> MiningParams:
    base = defaults or MiningParams()
    min_sup = args.min_sup if args.min_sup is not None else base.min_sup
    min_esup = args.min_esup if args.min_esup is not None else (
        min_sup if args.min_sup is not None and defaults is None else base.min_esup)
    pft = args.pft if args.pft is not None else base.pft
    return MiningParams(min_esup=min_esup, min_sup=min_sup, pft=pft)


def _add_run_options(p):
    p.add_argument("--input", help="UDB or FIMI file")
    p.add_argument("--scenario", help="named scenario (default parameters, or the data itself without --input)")
    p.add_argument("--min-esup", type=float)
    p.add_argument("--min-sup", type=float)
    p.add_argument("--pft", type=float)
    p.add_argument("--mean", type=float)
    p.add_argument("--variance", type=float)
    p.add_argument("--skew", type=float)
    p.add_argument("--zero-cutoff", type=float, default=bench.DEFAULT_ZERO_CUTOFF)
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int, default=bench.DEFAULT_RUNS)
    p.add_argument("--timeout-secs", type=float, default=bench.DEFAULT_TIMEOUT_SECS)
    p.add_argument("--no-memory", action="store_true", help="skip the memory-metered run")
    p.add_argument("--out", help="CSV file to write")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="umine", description="Frequent itemset mining over uncertain databases.")
    parser.add_argument("--list-algorithms", action="store_true", help="print the algorithm tags and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    mine = sub.add_parser("mine", help="run one algorithm and write a CSV row")
    mine.add_argument("--algo", help="algorithm tag (see --list-algorithms)")
    mine.add_argument("--list-algorithms", action="store_true")
    mine.add_argument("--results", help="also write the mined itemsets to this file")
    _add_run_options(mine)

    sw = sub.add_parser("sweep", help="run one algorithm over a list of values")
    sw.add_argument("--algo", required=True)
    sw.add_argument("--axis", required=True, choices=bench.SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma-separated, ascending")
    sw.add_argument("--parallel", action="store_true", help="run values concurrently (no timing)")
    _add_run_options(sw)

    gen = sub.add_parser("gen", help="generate a synthetic database")
    gen.add_argument("--scenario")
    gen.add_argument("--n-transactions", type=int)
    gen.add_argument("--n-items", type=int)
    gen.add_argument("--avg-len", type=float)
    gen.add_argument("--format", choices=("fimi", "udb"), default="udb")
    gen.add_argument("--mean", type=float)
    gen.add_argument("--variance", type=float)
    gen.add_argument("--skew", type=float)
    gen.add_argument("--zero-cutoff", type=float, default=bench.DEFAULT_ZERO_CUTOFF)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)

    ver = sub.add_parser("verify", help="cross-check every miner against the oracle")
    ver.add_argument("--input", required=True)
    ver.add_argument("--min-esup", type=float)
    ver.add_argument("--min-sup", type=float)
    ver.add_argument("--pft", type=float)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--mean", type=float)
    ver.add_argument("--variance", type=float)
    return parser


def _list_algorithms() -> int:
    for tag, algo in bench.ALGORITHMS.items():
        print(f"{tag}\t{algo.kind}")
    return EXIT_OK


def _config(args, algo: str) -> bench.ExperimentConfig:
    if args.input is None and args.scenario is None:
        raise bench.UsageError("give --input or --scenario")
    seed = _seed(args)
    defaults = None
    mean, var = args.mean, args.variance
    if args.scenario:
        sc = scenario(args.scenario, seed)
        defaults = sc.params()
        mean = sc.mean if mean is None else mean
        var = sc.variance if var is None else var
    return bench.ExperimentConfig(
        algorithm=algo, dataset=args.input or args.scenario, params=_params(args, defaults),
        mean=mean, variance=var, skew=args.skew, zero_cutoff=args.zero_cutoff, seed=seed,
        runs=args.runs, timeout_secs=args.timeout_secs, measure_memory=not args.no_memory)


def _mine(args) -> int:
    if args.list_algorithms:
        return _list_algorithms()
    if not args.algo:
        raise bench.UsageError("--algo is required")
    if not args.out:
        raise bench.UsageError("--out is required")
    bench.get_algorithm(args.algo)
    if args.runs < 1:
        raise bench.UsageError("--runs must be at least 1")
    record = bench.run_experiment(_config(args, args.algo))
    bench.emit_csv([record], args.out)
    if args.results and record.report is not None:
        bench.write_results(record.report, args.results)
    wall = "-" if record.wall_ms is None else f"{record.wall_ms:.3f} ms"
    print(f"{record.algorithm}: {record.itemset_count} itemsets, {wall}, status {record.status}")
    return EXIT_OK


def _sweep(args) -> int:
    if not args.out:
        raise bench.UsageError("--out is required")
    bench.get_algorithm(args.algo)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise bench.UsageError(f"bad --values {args.values!r}") from None
    if args.axis == "n_transactions":
        values = [int(v) for v in values]
        if args.scenario is None:
            raise bench.UsageError("an n_transactions sweep needs --scenario")
        args.input = None
    records = bench.sweep(args.axis, values, _config(args, args.algo), args.out,
                          parallel=args.parallel)
    for r in records:
        print(f"{r.dataset}\t{r.itemset_count}\t{r.wall_ms}\t{r.status}")
    return EXIT_OK


def _gen(args) -> int:
    seed = _seed(args)
    if args.scenario:
        sc = scenario(args.scenario, seed)
        spec = sc.spec if args.n_transactions is None else sc.spec.scaled(args.n_transactions)
        mean = sc.mean if args.mean is None else args.mean
        var = sc.variance if args.variance is None else args.variance
    else:
        if None in (args.n_transactions, args.n_items, args.avg_len):
            raise bench.UsageError("without --scenario give --n-transactions, --n-items and --avg-len")
        spec = SynthSpec(args.n_transactions, args.n_items, args.avg_len, seed=seed)
        mean = bench.DEFAULT_MEAN if args.mean is None else args.mean
        var = bench.DEFAULT_VARIANCE if args.variance is None else args.variance
    det = generate_synthetic(spec)
    if args.format == "fimi":
        text = serialize_fimi(det)
    elif args.skew is not None:
        text = serialize_udb(assign_zipf(det, args.skew, args.zero_cutoff, seed))
    else:
        text = serialize_udb(assign_gaussian(det, mean, var, seed))
    with open(args.out, "w") as fh:
        fh.write(text)
    print(f"wrote {len(det)} transactions to {args.out}")
    return EXIT_OK


def _verify(args) -> int:
    seed = _seed(args)
    data = read_any(args.input)
    if not hasattr(data, "probs"):
        mean = bench.DEFAULT_MEAN if args.mean is None else args.mean
        var = bench.DEFAULT_VARIANCE if args.variance is None else args.variance
        data = assign_gaussian(data, mean, var, seed)
    params = _params(args)
    truth = brute_force_mine(data, params)
    refs = {"esup": set(truth.esup_frequent), "exact": set(truth.prob_frequent),
            "pdu": set(brute_force_approx(data, params, "poisson")),
            "normal": set(brute_force_approx(data, params, "normal"))}
    failures = 0
    for tag, algo in bench.ALGORITHMS.items():
        if algo.kind == "oracle":
            continue
        report = algo.run(data, params)
        want = refs["pdu"] if tag == "pdu" else refs["normal"] if algo.kind == "approx" else refs[algo.kind]
        ok = report.keys() == want
        if ok and algo.kind == "exact":
            ok = all(abs(r.freq_prob - truth.prob_frequent[r.items]) <= 1e-9 for r in report.itemsets)
        failures += not ok
        print(f"{tag:9s} {'ok' if ok else 'MISMATCH'} ({len(report)} itemsets)")
    if failures:
        raise bench.InvariantError(f"{failures} algorithm(s) disagree with the oracle")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.list_algorithms and args.command in (None, "mine"):
            return _list_algorithms()
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        handler = {"mine": _mine, "sweep": _sweep, "gen": _gen, "verify": _verify}[args.command]
        return handler(args)
    except (bench.UsageError, ParameterError, KeyError, OracleSizeError) as exc:
        print(f"umine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"umine: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except bench.InvariantError as exc:
        print(f"umine: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
