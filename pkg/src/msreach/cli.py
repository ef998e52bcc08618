"""Command-line entry point: gen, solve, verify, plan, bench.

Exit status is 0 on success, 1 when ``verify`` finds a mismatch and 2 for
usage, input or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from typing import Sequence

import numpy as np

from msreach import planner
from msreach.direach import ALGORITHMS, MAX_DEPTH, SolveConfig, choose_delta_sparse, solve
from msreach.graph import (
    EdgeListError,
    SourceSet,
    gen_random,
    load_edge_list,
    load_sources,
    multi_source_reach,
    parse_reach_result,
)
from msreach.recur import choose_delta_recursive
from msreach.shortcut import SamplingParams

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    """A user-facing failure that maps to exit status 2."""


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror or exc}") from None


def _load_instance(graph_path: str, sources_path: str):
    g = load_edge_list(_read(graph_path))
    s = load_sources(_read(sources_path), g.n)
    return g, s


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    g = gen_random(args.n, args.mu, args.seed, dag=args.dag)
    text = g.to_text()
    if args.out:
        _write(args.out, text)
        print(g.m)
    else:
        sys.stdout.write(text)
        print(g.m, file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    g, s = _load_instance(args.graph, args.sources)
    sampling = SamplingParams(args.c_path, args.c_vertex, args.retries, args.seed)
    cfg = SolveConfig(algorithm=args.algo, delta_override=args.delta, mu_hint=args.mu,
                      k=args.k, sampling=sampling, threads=args.threads)
    result, stats = solve(g, s, cfg)
    out = [result.to_text(hex_rows=args.hex), f"# {stats.line()}\n"]
    if stats.trace:
        out.append("# trace\n")
        out.extend(f"#{line}\n" for line in stats.trace)
    sys.stdout.write("".join(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    g, s = _load_instance(args.graph, args.sources)
    try:
        claimed = parse_reach_result(_read(args.result), g.n)
    except EdgeListError as exc:
        print(f"format error: {exc}")
        return EXIT_USAGE
    if claimed.sources != s:
        print(f"format error: result lists sources {list(claimed.sources.ids)[:8]}, "
              f"expected {list(s.ids)[:8]}")
        return EXIT_USAGE
    truth = multi_source_reach(g, s, threads=args.threads)
    if truth == claimed:
        print("OK")
        return EXIT_OK
    diff = truth.rows.to_bool() != claimed.rows.to_bool()
    i, v = (int(x) for x in np.argwhere(diff)[0])
    print(f"mismatch: source {s.ids[i]} vertex {v}: expected {int(truth.rows[i, v])} "
          f"got {int(claimed.rows[i, v])}")
    return EXIT_MISMATCH


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise CliError(f"plan {args.what} requires {' '.join(missing)}")


def _fmt_interval(lo: float, hi: float, empty: bool) -> str:
    if empty:
        return "empty"
    if hi >= 2.0:
        return f"({lo:.3f}, 2]"
    return f"({lo:.3f}, {hi:.3f})"


def cmd_plan(args) -> int:
    table = planner.OmegaTable.load(_read(args.omega_table)) if args.omega_table else planner.DEFAULT_TABLE
    what = args.what
    if what == "table":
        if not args.name:
            raise CliError("plan table requires a table name (T2..T6)")
        planner.emit_tables(args.name, table, out=sys.stdout)
        return EXIT_OK
    if what == "sigma-tilde":
        print(f"{planner.sigma_tilde(table):.6f}")
        return EXIT_OK
    if what == "sigma-k":
        _need(args, "k")
        print(f"{planner.sigma_k(args.k, table, args.step):.6f}")
        return EXIT_OK
    _need(args, "sigma")
    sigma = args.sigma
    mu = args.mu if args.mu is not None else 2.0
    if what == "omega":
        value = planner.omega(sigma, table)
    elif what == "g0":
        value = planner.g0(sigma, table)
    elif what == "g0mu":
        value = planner.g0_mu(sigma, mu, table)
    elif what == "gk":
        _need(args, "k")
        value = planner.gk_mu(sigma, mu, args.k, table, args.step)
    elif what == "delta":
        if args.k is None:
            value = choose_delta_sparse(sigma, mu, table)
        else:
            value = choose_delta_recursive(sigma, args.k, mu, table)
    elif what == "interval":
        print(_fmt_interval(*planner.feasibility_interval(sigma, table)))
        return EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown plan target {what}")
    print(f"{value:.6f}")
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_bench(args) -> int:
    suite = [a.strip() for a in args.suite.split(",") if a.strip()]
    for algo in suite:
        if algo not in ALGORITHMS:
            raise CliError(f"unknown algorithm {algo!r} in suite")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["algorithm", "n", "mu", "sigma", "m", "seconds"])
    if not suite:
        return EXIT_OK
    rng = np.random.default_rng(args.seed)
    for n in _int_list(args.sizes):
        g = gen_random(n, args.mu, int(rng.integers(2 ** 31)), dag=args.dag)
        size = max(1, int(round(n ** args.sigma)))
        s = SourceSet(tuple(sorted(rng.choice(n, size=size, replace=False).tolist())))
        for algo in suite:
            cfg = SolveConfig(algorithm=algo, mu_hint=args.mu, k=args.k,
                              sampling=SamplingParams(seed=args.seed), threads=args.threads)
            start = time.perf_counter()
            solve(g, s, cfg)
            writer.writerow([algo, n, f"{args.mu:g}", f"{args.sigma:g}", g.m,
                             f"{time.perf_counter() - start:.6f}"])
            sys.stdout.flush()
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msreach", description="Multi-source directed reachability toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log shortcut construction details")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a seeded random digraph")
    gen.add_argument("-n", type=int, required=True, help="vertex count")
    gen.add_argument("-mu", "--mu", type=float, required=True, help="density exponent, m = round(n^mu)")
    gen.add_argument("-seed", "--seed", type=int, default=0)
    gen.add_argument("--dag", action="store_true", help="orient edges along a random vertex order")
    gen.add_argument("-o", "--out", help="output file (default: stdout)")
    gen.set_defaults(func=cmd_gen)

    sol = sub.add_parser("solve", help="compute reachability from a source set")
    sol.add_argument("graph")
    sol.add_argument("sources")
    sol.add_argument("--algo", choices=ALGORITHMS, default="direach")
    sol.add_argument("-k", type=int, default=1, help=f"recursion depth for recur (0..{MAX_DEPTH})")
    sol.add_argument("--delta", type=float, help="override the hop exponent, D = round(n^delta)")
    sol.add_argument("--mu", type=float, help="density exponent used to pick delta")
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--c-path", type=float, default=4.0)
    sol.add_argument("--c-vertex", type=float, default=4.0)
    sol.add_argument("--retries", type=int, default=4)
    sol.add_argument("--hex", action="store_true", help="print rows as hex bitsets")
    sol.add_argument("--threads", type=int, default=1)
    sol.set_defaults(func=cmd_solve)

    ver = sub.add_parser("verify", help="check a result file against BFS")
    ver.add_argument("graph")
    ver.add_argument("sources")
    ver.add_argument("result")
    ver.add_argument("--threads", type=int, default=1)
    ver.set_defaults(func=cmd_verify)

    plan = sub.add_parser("plan", help="evaluate exponent formulas and tables")
    plan.add_argument("what", choices=("omega", "g0", "g0mu", "gk", "delta", "interval",
                                       "sigma-tilde", "sigma-k", "table"))
    plan.add_argument("name", nargs="?", help="table name for 'plan table' (T2..T6)")
    plan.add_argument("--sigma", type=float)
    plan.add_argument("--mu", type=float)
    plan.add_argument("-k", type=int)
    plan.add_argument("--step", type=float, default=planner.DEFAULT_STEP, help="sigma grid step")
    plan.add_argument("--omega-table", help="file of 'sigma omega' pairs replacing the built-in table")
    plan.set_defaults(func=cmd_plan)

    bench = sub.add_parser("bench", help="report-only timing CSV")
    bench.add_argument("--suite", default="naive,direach", help="comma-separated algorithms")
    bench.add_argument("--sizes", default="200,400,800")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--mu", type=float, default=1.5)
    bench.add_argument("--sigma", type=float, default=0.5)
    bench.add_argument("-k", type=int, default=1)
    bench.add_argument("--dag", action="store_true")
    bench.add_argument("--threads", type=int, default=1)
    bench.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"msreach {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
