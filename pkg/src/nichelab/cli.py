"""Command-line entry point: ``nichelab {run,sweep,fig1,fig2,oracle,verify}``.

Exit codes: 0 completed, 1 usage error, 2 runtime or I/O error,
3 verification failure. ``NICHELAB_WORKERS`` sets the default worker count.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .experiments import (TRACE_POLICIES, RunConfig, SweepAborted, best_fitness_study, default_workers,
                          run_grid, run_single, success_table, summarize)
from .mechanisms import DISTANCE_NAMES, KIND_NAMES, MechanismSpec
from .results import ResultsError, persist_results, write_fig1_table, write_fig2_table

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

FIG1_N = [32 * 2 ** i for i in range(10)]
FIG2_MU = [2 ** i for i in range(1, 11)]
FIG2_W = [2 ** i for i in range(8)]
SMALL_FIG1_MAX_N = 1024
SMALL_FIG2_MAX_MU = 128


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Help(argparse.HelpFormatter):
    """Every flag shows either ``(required)`` or its default."""

    def _get_help_string(self, action):
        text = action.help or ""
        if not action.option_strings or action.default is argparse.SUPPRESS:
            return text
        if action.required:
            tail = "(required)"
        elif action.default is None:
            tail = "(default: unset)"
        elif isinstance(action.default, list):
            tail = f"(default: {','.join(map(str, action.default))})"
        else:
            tail = "(default: %(default)s)"
        return f"{text} {tail}".strip()


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(choices):
    def parse(text: str) -> list[str]:
        vals = [v for v in text.split(",") if v]
        bad = [v for v in vals if v not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; choose from {sorted(choices)}")
        return vals
    return parse


def _mechanism(args) -> MechanismSpec:
    if args.mechanism == "rts":
        if args.w is None:
            raise UsageError("--w is required with --mechanism rts")
        if args.w < 1:
            raise UsageError("--w must be >= 1")
        return MechanismSpec.parse("rts", args.w, args.distance or "geno")
    if args.w is not None:
        raise UsageError(f"--w only applies to --mechanism rts, not {args.mechanism}")
    if args.distance is not None:
        raise UsageError(f"--distance only applies to --mechanism rts, not {args.mechanism}")
    return MechanismSpec.parse(args.mechanism)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ResultsError(f"{out}: {exc}") from exc
    return out


def cmd_run(args) -> int:
    mech = _mechanism(args)
    try:
        cfg = RunConfig(args.n, args.mu, mech, args.fitness, args.budget, args.seed, args.run_index, args.trace)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = run_single(cfg)
    print(f"{res.outcome}: {mech.label} n={cfg.n} mu={cfg.mu} {res.fitness} seed={cfg.master_seed} "
          f"run={cfg.run_index} generations={res.generations_used}/{res.budget_generations} "
          f"best={res.best_fitness_final} ({res.best_normalized_fitness:.4f}) "
          f"0^n={'yes' if res.found_zero_opt else 'no'} 1^n={'yes' if res.found_one_opt else 'no'}")
    if args.out:
        res.final_population = None
        persist_results([res], args.out, master_seed=cfg.master_seed)
    return EXIT_OK


def _sweep_grid(args) -> list[RunConfig]:
    if args.mechanism != "rts":
        if args.w or args.distance:
            raise UsageError(f"--w/--distance only apply to --mechanism rts, not {args.mechanism}")
        mechs = [MechanismSpec.parse(args.mechanism)]
    else:
        if not args.w:
            raise UsageError("--w is required with --mechanism rts")
        mechs = [MechanismSpec.rts(w, d) for d in (args.distance or ["geno"]) for w in args.w]
    try:
        return [RunConfig(args.n, mu, m, args.fitness, args.budget, args.seed, trace_policy="none")
                for m in mechs for mu in args.mu]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_sweep(args) -> int:
    grid = _sweep_grid(args)
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    results = run_grid(grid, args.runs, args.workers)
    summaries = summarize(results)
    for s in summaries:
        w = f" w={s.w} {s.distance}" if s.w else ""
        print(f"{s.mechanism}{w} n={s.n} mu={s.mu}: {s.successes}/{s.runs} successes")
    if args.out:
        persist_results(summaries, args.out, master_seed=args.seed)
    if args.runs_out:
        persist_results(results, args.runs_out, master_seed=args.seed)
    return EXIT_OK


def cmd_fig1(args) -> int:
    n_values = args.n_values or FIG1_N
    if args.small:
        n_values = [n for n in n_values if n <= SMALL_FIG1_MAX_N]
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    out = _out_dir(args.out_dir)
    stats = best_fitness_study(n_values, args.mu, MechanismSpec.pc(), args.runs, args.seed, args.workers)
    header = [f"nichelab {__version__} fig1: normalised best fitness, probabilistic crowding, twomax",
              f"mu={args.mu} runs={args.runs} master_seed={args.seed} grid={'small' if args.small else 'full'}"]
    write_fig1_table(out / "fig1.csv", stats, header)
    for s in stats:
        print(f"n={s.n}: median {s.median:.4f} q1 {s.q1:.4f} q3 {s.q3:.4f} max {s.maximum:.4f}")
    return EXIT_OK


def cmd_fig2(args) -> int:
    mus = args.mu or FIG2_MU
    if args.small:
        mus = [m for m in mus if m <= SMALL_FIG2_MAX_MU]
    ws = args.w or FIG2_W
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    out = _out_dir(args.out_dir)
    grid = [RunConfig(args.n, mu, MechanismSpec.rts(w, d), master_seed=args.seed, trace_policy="none")
            for d in args.distance for w in ws for mu in mus]
    summaries = summarize(run_grid(grid, args.runs, args.workers))
    names = {"geno": "genotypic", "pheno": "phenotypic"}
    for d in args.distance:
        dmus, dws, cells = success_table(summaries, d)
        header = [f"nichelab {__version__} fig2: successful runs, RTS, twomax, {names[d]} distance",
                  f"n={args.n} runs={args.runs} master_seed={args.seed} grid={'small' if args.small else 'full'}"]
        write_fig2_table(out / f"fig2_{names[d]}.csv", dmus, dws, cells, header)
        for mu in dmus:
            print(f"{d} mu={mu}: " + " ".join(f"w{w}={cells[(mu, w)]}" for w in dws))
    persist_results(summaries, out / "fig2_summary.csv", master_seed=args.seed,
                    extra={"grid": "small" if args.small else "full"})
    return EXIT_OK


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--check {args.check} needs {', '.join(missing)}")


def cmd_oracle(args) -> int:
    try:
        if args.check == "drift":
            _need(args, "n", "k")
            print(oracle.drift_report(args.n, args.k).line())
        elif args.check == "init-gap":
            _need(args, "n", "mu", "sigma")
            rng = np.random.default_rng(args.seed)
            print(oracle.init_gap_probability_mc(args.n, args.mu, args.sigma, args.trials, rng).line())
        elif args.check == "takeover":
            _need(args, "n", "mu", "w")
            print(f"rts_takeover_bound(mu={args.mu}, w={args.w}, n={args.n}) = "
                  f"{oracle.rts_takeover_bound(args.mu, args.w, args.n):.12g}")
        else:
            _need(args, "name", "mu")
            if args.name == "rts_success_lb":
                _need(args, "n")
                for base in ("2", "e"):
                    v = oracle.theorem_bound(args.name, args.mu, args.n, base)
                    print(f"rts_success_lb(mu={args.mu}, n={args.n}, log base {base}) = {v:.10g}")
            else:
                if args.name == "lemma33_budget":
                    _need(args, "n")
                print(f"{args.name}(mu={args.mu}{'' if args.n is None else f', n={args.n}'}) = "
                      f"{oracle.theorem_bound(args.name, args.mu, args.n):.10g}")
    except oracle.BoundNotApplicable as exc:
        print(f"not applicable: {exc}")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import acceptance

    chosen = set(args.only or range(1, 10))
    ok = True
    for number, fn in acceptance.all_criteria(args.seed):
        if number not in chosen:
            continue
        try:
            res = acceptance.timed(fn)
        except Exception as exc:  # a crash is a failed criterion, not a CLI error
            res = acceptance.CriterionResult(number, "crashed", False, repr(exc))
        print(res.line(), flush=True)
        ok &= res.passed
    print("verify: all criteria passed" if ok else "verify: FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    fmt = _Help
    parser = _Parser(prog="nichelab", description="(mu+1) EA niching experiments on OneMax/TwoMax",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"nichelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    workers_help = "concurrent runs (default from NICHELAB_WORKERS, else 1)"

    p = sub.add_parser("run", help="one run", formatter_class=fmt)
    p.add_argument("--n", type=int, required=True, help="bitstring length")
    p.add_argument("--mu", type=int, required=True, help="population size")
    p.add_argument("--mechanism", choices=sorted(KIND_NAMES), required=True, help="survivor selection")
    p.add_argument("--w", type=int, default=None, help="RTS window size, required for rts")
    p.add_argument("--distance", choices=sorted(DISTANCE_NAMES), default=None, help="RTS distance (rts only; geno if unset)")
    p.add_argument("--fitness", choices=["onemax", "twomax"], default="twomax", help="fitness function")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--run-index", type=int, default=0, help="substream index")
    p.add_argument("--budget", type=int, default=None, help="generation budget (unset: ceil(10 mu n ln n))")
    p.add_argument("--trace", choices=TRACE_POLICIES, default="best_fitness_per_branch", help="trace recording")
    p.add_argument("--out", default=None, help="result file to write (unset: print only)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of runs with success counts", formatter_class=fmt)
    p.add_argument("--n", type=int, default=100, help="bitstring length")
    p.add_argument("--mu", type=_int_list, default=[2, 4, 8], help="comma-separated population sizes")
    p.add_argument("--mechanism", choices=sorted(KIND_NAMES), default="rts", help="survivor selection")
    p.add_argument("--w", type=_int_list, default=None, help="comma-separated window sizes, required for rts")
    p.add_argument("--distance", type=_str_list(DISTANCE_NAMES), default=None,
                   help="comma-separated RTS distances (rts only; geno if unset)")
    p.add_argument("--fitness", choices=["onemax", "twomax"], default="twomax", help="fitness function")
    p.add_argument("--runs", type=int, default=100, help="runs per grid point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--budget", type=int, default=None, help="generation budget (unset: ceil(10 mu n ln n))")
    p.add_argument("--out", default=None, help="summary file, one row per grid point")
    p.add_argument("--runs-out", default=None, help="per-run record file")
    p.add_argument("--workers", type=int, default=default_workers(), help=workers_help)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fig1", help="best-fitness boxplot table for probabilistic crowding", formatter_class=fmt)
    p.add_argument("--runs", type=int, default=100, help="runs per problem size")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out-dir", default=".", help="directory for fig1.csv")
    p.add_argument("--small", action="store_true", help=f"cap n at {SMALL_FIG1_MAX_N}")
    p.add_argument("--mu", type=int, default=32, help="population size")
    p.add_argument("--n-values", type=_int_list, default=None, help="comma-separated n grid (unset: 32..16384)")
    p.add_argument("--workers", type=int, default=default_workers(), help=workers_help)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", help="RTS success-count tables", formatter_class=fmt)
    p.add_argument("--runs", type=int, default=100, help="runs per grid point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out-dir", default=".", help="directory for fig2_*.csv")
    p.add_argument("--small", action="store_true", help=f"cap mu at {SMALL_FIG2_MAX_MU}")
    p.add_argument("--n", type=int, default=100, help="bitstring length")
    p.add_argument("--mu", type=_int_list, default=None, help="comma-separated mu grid (unset: 2..1024)")
    p.add_argument("--w", type=_int_list, default=None, help="comma-separated w grid (unset: 1..128)")
    p.add_argument("--distance", type=_str_list(DISTANCE_NAMES), default=["geno", "pheno"], help="comma-separated distances")
    p.add_argument("--workers", type=int, default=default_workers(), help=workers_help)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("oracle", help="analytic bounds and exact drift", formatter_class=fmt)
    p.add_argument("--check", choices=["drift", "init-gap", "takeover", "bounds"], required=True, help="which check to run")
    p.add_argument("--n", type=int, default=None, help="bitstring length")
    p.add_argument("--k", type=int, default=None, help="parent ones-count (drift)")
    p.add_argument("--mu", type=int, default=None, help="population size")
    p.add_argument("--w", type=int, default=None, help="window size (takeover)")
    p.add_argument("--sigma", type=float, default=None, help="gap half-width (init-gap)")
    p.add_argument("--trials", type=int, default=10**6, help="Monte Carlo trials (init-gap)")
    p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo checks")
    p.add_argument("--name", choices=oracle.BOUND_NAMES, default=None, help="bound to evaluate (bounds)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run the desk-scale acceptance criteria", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=11, help="master seed")
    p.add_argument("--only", type=_int_list, default=None, help="comma-separated criterion numbers (unset: all)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nichelab {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResultsError, OSError, SweepAborted) as exc:
        print(f"nichelab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
