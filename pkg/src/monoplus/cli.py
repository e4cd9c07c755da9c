"""Command-line entry point: ``gen``, ``multiply``, ``bench`` and ``exponents``.

Exit codes: 0 success, 1 usage or parse error, 2 precondition violation,
3 verification mismatch or invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from monoplus.core import AlgoParams, FallbackToNaive, choose_params, solve
from monoplus.exponents import DEFAULT_MODEL, application_table, load_model
from monoplus.matrices import (
    INF,
    InstanceMeta,
    PreconditionError,
    bd_to_monotone,
    format_matrix,
    naive_minplus,
    read_matrix,
    write_matrix,
)
from monoplus.polymatmul import BACKENDS

log = logging.getLogger("monoplus")

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_MISMATCH = 0, 1, 2, 3
INF_RATE = 0.05
CSV_HEADER = "n,m,mu_bound,seed,backend,wall_core_ms,wall_naive_ms,max_Tb,levels,verified"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for precondition failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("MONOPLUS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MONOPLUS_SEED must be an integer, got {raw!r}") from None


# -- instance generation -------------------------------------------------------------

def instance_shape(n: int, beta: float, mu: float) -> tuple[int, int]:
    """(m, value bound) = (ceil(n^beta), ceil(n^mu))."""
    # round first so that e.g. 64 ** 0.5 = 8.000000000000002 does not become 9
    m = max(1, math.ceil(round(n ** beta, 9)))
    return m, math.ceil(round(n ** mu, 9))


def generate(n: int, beta: float, mu: float, kind: str = "monotone", seed: int = 0,
             inf_rate: float = INF_RATE) -> tuple[np.ndarray, np.ndarray]:
    """Random A (n x m) and B (m x n) with entries in [0, ceil(n^mu)]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if beta < 0 or mu < 0:
        raise ValueError("beta and mu must be non-negative")
    if not 0 <= inf_rate <= 1:
        raise ValueError("inf rate must lie in [0, 1]")
    m, bound = instance_shape(n, beta, mu)
    rng = np.random.default_rng(seed)
    A = rng.integers(0, bound + 1, size=(n, m), dtype=np.int64)
    A[rng.random((n, m)) < inf_rate] = INF
    if kind == "monotone":
        B = np.sort(rng.integers(0, bound + 1, size=(m, n), dtype=np.int64), axis=1)
    elif kind == "bounded_difference":
        B = _bounded_difference(rng, m, n, bound)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return A, B


def _bounded_difference(rng: np.random.Generator, rows: int, cols: int, bound: int) -> np.ndarray:
    # X[i, j] = r[i] + c[j] for +-1 walks r and c: row and column neighbours differ by exactly 1
    r = np.concatenate([[0], np.cumsum(rng.choice([-1, 1], size=rows - 1))])
    c = np.concatenate([[0], np.cumsum(rng.choice([-1, 1], size=cols - 1))])
    X = r[:, None] + c[None, :]
    X -= X.min()
    # fold into [0, bound] without breaking the unit steps
    if bound > 0:
        period = 2 * bound
        X = X % period
        X = np.where(X > bound, period - X, X)
    else:
        X[:] = 0
    return X.astype(np.int64)


# -- commands ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    A, B = generate(args.n, args.beta, args.mu, args.kind, args.seed, args.inf_rate)
    try:
        write_matrix(args.out_a, A)
        write_matrix(args.out_b, B)
    except OSError as exc:
        print(f"error: cannot write instance: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _first_difference(C: np.ndarray, D: np.ndarray) -> str:
    i, j = (int(x) for x in np.argwhere(C != D)[0])
    show = lambda v: "inf" if v == INF else str(int(v))  # noqa: E731
    return f"C[{i}][{j}] = {show(C[i, j])}, oracle has {show(D[i, j])}"


def cmd_multiply(args) -> int:
    try:
        A = read_matrix(args.a)
        B = read_matrix(args.b)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if A.shape[1] != B.shape[0]:
        print(f"error: cannot multiply {A.shape[0]}x{A.shape[1]} by {B.shape[0]}x{B.shape[1]}",
              file=sys.stderr)
        return EXIT_USAGE

    status = EXIT_OK
    if args.naive:
        C = naive_minplus(A, B)
    else:
        try:
            meta = InstanceMeta.from_matrices(A, B)
            params = None
            if args.alpha_override is not None or args.backend != "naive" or args.check_invariants:
                params = _params(meta, args)
            result = solve(A, B, meta, params, seed=args.seed)
        except PreconditionError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        C = result.C
        stats = result.stats
        log.info("p=%s alpha=%.4f levels=%s subproducts=%s max_Tb=%s fallback=%s",
                 stats.p, stats.alpha, stats.levels, stats.subproducts, stats.max_Tb, stats.fallback)
        if stats.invariants is not None and not stats.invariants.ok:
            for msg in stats.invariants.messages:
                print(f"invariant violated: {msg}", file=sys.stderr)
            status = EXIT_MISMATCH

    sys.stdout.write(format_matrix(C))
    if args.verify:
        D = naive_minplus(A, B)
        if not np.array_equal(C, D):
            print(f"mismatch: {_first_difference(C, D)}", file=sys.stderr)
            status = EXIT_MISMATCH
    return status


def _params(meta: InstanceMeta, args) -> AlgoParams | None:
    """Explicit parameters, or None when the instance falls back to the naive product."""
    try:
        return choose_params(
            meta,
            seed=args.seed,
            alpha_override=args.alpha_override,
            backend=args.backend,
            check_invariants=args.check_invariants,
        )
    except FallbackToNaive:
        return None


@dataclass
class BenchRecord:
    n: int
    m: int
    mu_bound: int
    seed: int
    backend: str
    wall_core_ms: float
    wall_naive_ms: float
    max_Tb: int
    levels: int
    verified: bool

    def row(self) -> list:
        out = list(astuple(self))
        out[5], out[6] = f"{self.wall_core_ms:.3f}", f"{self.wall_naive_ms:.3f}"
        out[9] = "true" if self.verified else "false"
        return out


assert ",".join(f.name for f in fields(BenchRecord)) == CSV_HEADER


def bench_run(n: int, beta: float, mu: float, seed: int, backend: str = "naive",
              alpha_override: float | None = None) -> BenchRecord:
    A, B = generate(n, beta, mu, "monotone", seed)
    m, bound = instance_shape(n, beta, mu)
    meta = InstanceMeta(n=n, m=m, beta=beta, mu=mu, value_bound=bound)
    try:
        params = choose_params(meta, seed=seed, alpha_override=alpha_override, backend=backend)
    except FallbackToNaive:
        params = None
    t0 = time.perf_counter()
    res = solve(A, B, meta, params, seed=seed)
    t1 = time.perf_counter()
    D = naive_minplus(A, B)
    t2 = time.perf_counter()
    return BenchRecord(
        n=n, m=m, mu_bound=bound, seed=seed, backend=backend,
        wall_core_ms=1000 * (t1 - t0), wall_naive_ms=1000 * (t2 - t1),
        max_Tb=res.stats.max_Tb, levels=res.stats.levels,
        verified=bool(np.array_equal(res.C, D)),
    )


def fit_growth(ns, values) -> float | None:
    """Least-squares slope of log(value) against log(n); None if undefined."""
    pts = [(math.log(n), math.log(v)) for n, v in zip(ns, values) if v > 0]
    if len({x for x, _ in pts}) < 2:
        return None
    slope, _ = np.polyfit([x for x, _ in pts], [y for _, y in pts], 1)
    return float(slope)


def cmd_bench(args) -> int:
    records: list[tuple[float, float, BenchRecord]] = []
    out = sys.stdout if args.csv == "-" else None
    try:
        fh = out or open(args.csv, "w", encoding="utf-8", newline="")
    except OSError as exc:
        print(f"error: cannot write {args.csv}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for beta in args.beta:
            for mu in args.mu:
                for n in args.n:
                    for seed in args.seeds:
                        rec = bench_run(n, beta, mu, seed, args.backend, args.alpha_override)
                        writer.writerow(rec.row())
                        fh.flush()
                        records.append((beta, mu, rec))
    finally:
        if out is None:
            fh.close()

    lines = _fit_report(records, args.alpha_override)
    for line in lines:
        print(line, file=sys.stderr)
    if args.csv != "-":
        Path(args.csv + ".fit.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK if all(r.verified for _, _, r in records) else EXIT_MISMATCH


def _fit_report(records, alpha_override) -> list[str]:
    lines = []
    groups: dict[tuple[float, float], dict[int, list[int]]] = {}
    for beta, mu, rec in records:
        groups.setdefault((beta, mu), {}).setdefault(rec.n, []).append(rec.max_Tb)
    for (beta, mu), by_n in groups.items():
        ns = sorted(by_n)
        slope = fit_growth(ns, [float(np.mean(by_n[n])) for n in ns])
        fitted = "undefined" if slope is None else f"{slope:.4f}"
        lines.append(f"# beta={beta:g} mu={mu:g}: max_Tb growth exponent {fitted} over n={ns}")
    return lines


def cmd_exponents(args) -> int:
    try:
        model = load_model(args.model) if args.model else DEFAULT_MODEL
    except (OSError, ValueError) as exc:
        print(f"error: invalid model file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = application_table(model)
    width = max(len(r.problem) for r in rows)
    print(f"{'problem':<{width}} | previous | improved")
    for r in rows:
        print(f"{r.problem:<{width}} | {r.previous} | {r.improved}")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    parser = _Parser(prog="monoplus", description="Monotone min-plus products and exponent bounds.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log run statistics to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a random instance A, B")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--mu", type=float, default=1.0)
    g.add_argument("--kind", choices=("monotone", "bounded_difference"), default="monotone")
    g.add_argument("--seed", type=int, default=default_seed)
    g.add_argument("--inf-rate", type=float, default=INF_RATE)
    g.add_argument("--out-a", required=True)
    g.add_argument("--out-b", required=True)
    g.set_defaults(func=cmd_gen)

    mul = sub.add_parser("multiply", help="print A * B in the matrix text format")
    mul.add_argument("a")
    mul.add_argument("b")
    mul.add_argument("--verify", action="store_true", help="compare with the naive product")
    mul.add_argument("--check-invariants", action="store_true")
    mul.add_argument("--backend", choices=BACKENDS, default="naive")
    mul.add_argument("--seed", type=int, default=default_seed)
    mul.add_argument("--alpha-override", type=float, default=None)
    mul.add_argument("--naive", action="store_true", help="skip the fast path (B need not be monotone)")
    mul.set_defaults(func=cmd_multiply)

    b = sub.add_parser("bench", help="sweep instances and write CSV")
    b.add_argument("--n", type=int, nargs="+", required=True)
    b.add_argument("--beta", type=float, nargs="+", default=[1.0])
    b.add_argument("--mu", type=float, nargs="+", default=[1.0])
    b.add_argument("--seeds", type=int, nargs="+", default=[default_seed])
    b.add_argument("--backend", choices=BACKENDS, default="naive")
    b.add_argument("--alpha-override", type=float, default=None)
    b.add_argument("--csv", default="-", help="output path, '-' for stdout")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("exponents", help="print the application exponent table")
    e.add_argument("model", nargs="?", default=None, help="file of 'beta omega' lines")
    e.set_defaults(func=cmd_exponents)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        default_seed = _default_seed()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser(default_seed)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
