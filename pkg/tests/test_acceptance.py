"""Acceptance criteria 1-8, one verdict line each (see the terminal summary)."""

from __future__ import annotations

import contextlib
import csv
import io
import math
import os
import time

import numpy as np
import pytest

from conftest import random_polymatrix_pair, record, run_segtree_script
from monoplus.cli import generate, main
from monoplus.core import choose_params, solve
from monoplus.exponents import (
    APSP2_T_EXPONENT,
    DEFAULT_MODEL,
    OMEGA,
    apsp2_bound,
    dyck_bound,
    load_model,
    range_mode_bound,
    ssrp_closed_form,
    ssrp_rectangular,
    ted_bound,
    ted_improved,
)
from monoplus.matrices import InstanceMeta, write_matrix
from monoplus.polymatmul import coefficient_bound, poly_matmul


def run_cli(args: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(args)
    return code, out.getvalue(), err.getvalue()


def test_criterion_1_oracle_exactness(tmp_path):
    # 24 shape classes x 9 seeds; seeds 0-2 use the balanced parameters, the rest
    # force small primes (alpha = 0 or 0.25) so the remainder phase does real work
    start = time.perf_counter()
    runs = failures = 0
    first_failure = ""
    for n in (8, 16, 32, 64):
        for beta in (0.5, 1.0, 1.5):
            for mu in (0.5, 1.0):
                for seed in range(9):
                    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
                    A, B = generate(n, beta, mu, "monotone", seed)
                    write_matrix(a, A)
                    write_matrix(b, B)
                    extra = [] if seed < 3 else ["--alpha-override", "0" if seed < 6 else "0.25"]
                    code, _, err = run_cli(["multiply", str(a), str(b), "--verify", "--seed", str(seed), *extra])
                    runs += 1
                    if code != 0:
                        failures += 1
                        first_failure = first_failure or f"n={n} beta={beta} mu={mu} seed={seed}: {err.strip()}"
    elapsed = time.perf_counter() - start
    ok = failures == 0 and runs >= 200 and elapsed < 300
    record(1, ok, f"{runs - failures}/{runs} cmd_multiply --verify runs exact in {elapsed:.1f}s"
               + (f"; first failure {first_failure}" if first_failure else ""))


def test_criterion_2_invariants(tmp_path):
    rng = np.random.default_rng(2024)
    violations: dict[str, int] = {}
    levels = max_offset = cli_bad = 0
    for t in range(30):
        n = int(rng.integers(4, 33))
        beta = float(rng.choice([0.5, 1.0, 1.5]))
        mu = float(rng.choice([1.0, 1.5, 2.0]))
        A, B = generate(n, beta, mu, "monotone", 100 + t)
        meta = InstanceMeta.from_matrices(A, B)
        params = choose_params(meta, seed=t, alpha_override=0.0, check_invariants=True)
        rep = solve(A, B, meta, params).stats.invariants
        for kind, cnt in rep.violations.items():
            violations[kind] = violations.get(kind, 0) + cnt
        levels += rep.levels_checked
        max_offset = max(max_offset, rep.max_witness_offset)
        write_matrix(tmp_path / "a.txt", A)
        write_matrix(tmp_path / "b.txt", B)
        code, _, _ = run_cli(["multiply", str(tmp_path / "a.txt"), str(tmp_path / "b.txt"),
                              "--check-invariants", "--alpha-override", "0", "--seed", str(t)])
        cli_bad += code != 0
    ok = not violations and cli_bad == 0 and levels > 0
    record(2, ok, f"30 instances, {levels} levels checked, violations={violations or 0}, "
                  f"cli failures={cli_bad}, largest witness offset |b|={max_offset}")


def test_criterion_3_formula_tier():
    from fractions import Fraction

    tol = 5e-4
    checks = {
        "range mode 1.4416": abs(range_mode_bound(DEFAULT_MODEL)["n"] - 1.4416) <= tol,
        "TED 1.9149": abs(ted_improved(OMEGA)["m"] - 1.9149) <= tol,
        "TED previous 1.9541": abs(ted_bound(2.8244)["m"] - 1.9541) <= tol,
        "Dyck 4.5442": abs(dyck_bound(DEFAULT_MODEL)["k"] - 4.5442) <= tol,
        "SSRP rect M 0.8825": abs(ssrp_rectangular(0.0)["M"] - 0.8825) <= tol,
        "SSRP rect n 2.4466": abs(ssrp_rectangular(0.0)["n"] - 2.4466) <= tol,
    }
    w = Fraction(23728639, 10**7)
    closed = ssrp_closed_form(w, Fraction(0))
    checks["SSRP closed form exact"] = closed["M"] == 2 / (5 - w) and closed["n"] == (9 - w) / (5 - w)
    failed = [name for name, good in checks.items() if not good]
    record(3, not failed, f"{len(checks) - len(failed)}/{len(checks)} formula checks" + (f"; failed {failed}" if failed else ""))


def test_criterion_4_data_tier():
    free = apsp2_bound(DEFAULT_MODEL)
    pinned = apsp2_bound(DEFAULT_MODEL, APSP2_T_EXPONENT)
    ok = 2.2593 <= round(free["n"], 10) <= 2.2700 and abs(pinned["n"] - 2.25925) <= 1e-5
    detail = (f"3-point table optimum {free['n']:.5f} at t=n^{free.params['t_exponent']:.4f}, "
              f"pinned t=n^{APSP2_T_EXPONENT} gives {pinned['n']:.5f}")
    table = os.environ.get("MONOPLUS_OMEGA_TABLE")
    if table:
        fine = apsp2_bound(load_model(table))["n"]
        ok = ok and abs(fine - 2.2593) <= 2e-3
        detail += f", fine table {fine:.5f}"
    else:
        detail += ", fine-table tier not run (set MONOPLUS_OMEGA_TABLE)"
    record(4, ok, detail)


@pytest.mark.skipif(not os.environ.get("MONOPLUS_OMEGA_TABLE"),
                    reason="needs a sourced fine omega(beta) table in MONOPLUS_OMEGA_TABLE")
def test_criterion_4_fine_table():
    fine = apsp2_bound(load_model(os.environ["MONOPLUS_OMEGA_TABLE"]))["n"]
    assert abs(fine - 2.2593) <= 2e-3


def test_criterion_5_backend_equivalence():
    rng = np.random.default_rng(5)
    agree = 0
    for _ in range(100):
        Ap, Bp = random_polymatrix_pair(rng, max_dim=16, max_degree=64)
        stride = max(1, coefficient_bound(Ap, Bp).bit_length())
        ref = poly_matmul(Ap, Bp, "naive").coeffs
        agree += all(np.array_equal(poly_matmul(Ap, Bp, be, stride=stride).coeffs, ref)
                     for be in ("split3-eval", "split3-pack"))
    record(5, agree == 100, f"{agree}/100 random instances coefficient-exact across naive, split3-eval, split3-pack")


def test_criterion_6_segment_tree():
    wrong = over = 0
    for seed in range(50):
        w, o = run_segtree_script(seed, 10_000)
        wrong += w
        over += o
    record(6, wrong == 0 and over == 0,
           f"50 scripts x 10^4 ops: {wrong} wrong answers, {over} ops over 2*ceil(log2 n)+4 visits")


def test_criterion_7_tb_statistics(tmp_path):
    n, beta, mu = 64, 1.0, 1.0
    sizes, alpha = [], None
    for seed in range(30):
        A, B = generate(n, beta, mu, "monotone", seed)
        meta = InstanceMeta(n=n, m=64, beta=beta, mu=mu, value_bound=64)
        params = choose_params(meta, seed=seed)
        alpha = params.alpha
        sizes.append(solve(A, B, meta, params).stats.max_Tb)
    mean = float(np.mean(sizes))
    bound = 50 * n ** (1 + beta + mu - alpha) * math.log2(n) ** 2
    # informational: growth of max_Tb with n, small primes so that T_b is non-empty
    csv_path = tmp_path / "growth.csv"
    code, _, err = run_cli(["bench", "--n", "16", "32", "64", "128", "--seeds", "0",
                            "--alpha-override", "0", "--csv", str(csv_path)])
    fit = err.strip().splitlines()[-1] if err.strip() else "no fit"
    record(7, mean <= bound and code == 0,
           f"mean max_Tb {mean:.1f} <= {bound:.3g} (alpha={alpha:.4f}); {fit.lstrip('# ')}")


def test_criterion_8_bench_harness(tmp_path):
    out = tmp_path / "bench.csv"
    start = time.perf_counter()
    code, _, _ = run_cli(["bench", "--n", "32", "64", "128", "256", "--seeds", "0", "--csv", str(out)])
    elapsed = time.perf_counter() - start
    with out.open() as fh:
        rows = list(csv.reader(fh))
    header_ok = rows[0] == "n,m,mu_bound,seed,backend,wall_core_ms,wall_naive_ms,max_Tb,levels,verified".split(",")
    body_ok = len(rows) == 5 and all(len(r) == 10 and r[-1] == "true" and int(r[7]) >= 0 for r in rows[1:])
    record(8, code == 0 and header_ok and body_ok and elapsed < 600,
           f"bench n=32..256 wrote {len(rows) - 1} verified rows in {elapsed:.1f}s")
