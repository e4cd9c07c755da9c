from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from monoplus.matrices import INF

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_instance(rng: np.random.Generator, n: int, m: int, n2: int, bound: int, inf_rate: float = 0.05):
    """A with occasional +inf cells, B row-monotone in [0, bound]."""
    A = rng.integers(0, bound + 1, size=(n, m), dtype=np.int64)
    A[rng.random((n, m)) < inf_rate] = INF
    B = np.sort(rng.integers(0, bound + 1, size=(m, n2), dtype=np.int64), axis=1)
    return A, B


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def run_segtree_script(seed: int, n_ops: int, size: int | None = None) -> tuple[int, int]:
    """Random chmin/query script against a plain array.

    Returns (number of disagreements, number of ops over the visit budget).
    """
    from monoplus.segtree import ChminSegTree

    rng = np.random.default_rng(seed)
    if size is None:
        size = int(rng.integers(1, 2000))
    tree = ChminSegTree(size)
    shadow = np.full(size, INF, dtype=np.int64)
    budget = 2 * (size - 1).bit_length() + 4
    wrong = over = 0
    for _ in range(n_ops):
        if rng.random() < 0.5:
            i, j = sorted(int(x) for x in rng.integers(1, size + 1, 2))
            u = int(rng.integers(-10**9, 10**9))
            tree.range_chmin(i, j, u)
            np.minimum(shadow[i - 1:j], u, out=shadow[i - 1:j])
        else:
            pos = int(rng.integers(1, size + 1))
            wrong += tree.query(pos) != shadow[pos - 1]
        over += tree.visits > budget
    return wrong, over


def convolution_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple-loop product of coefficient tables (rows, cols, x_terms, y_terms) in plain Python."""
    n1, m, xa, ya = a.shape
    _, n2, xb, yb = b.shape
    out = np.zeros((n1, n2, xa + xb - 1, ya + yb - 1), dtype=np.int64)
    for i in range(n1):
        for j in range(n2):
            acc = {}
            for k in range(m):
                for (x1, y1) in zip(*np.nonzero(a[i, k])):
                    for (x2, y2) in zip(*np.nonzero(b[k, j])):
                        key = (x1 + x2, y1 + y2)
                        acc[key] = acc.get(key, 0) + int(a[i, k, x1, y1]) * int(b[k, j, x2, y2])
            for (x, y), v in acc.items():
                out[i, j, x, y] = v
    return out


def random_polymatrix_pair(rng: np.random.Generator, max_dim: int = 16, max_degree: int = 64,
                           monomial: bool | None = None):
    """Random factors with x-degree <= 1 and y-degree <= D; monomial entries or small dense counts."""
    from monoplus.polymatmul import MonomialMatrix, PolyMatrix

    n1, m, n2 = (int(v) for v in rng.integers(1, max_dim + 1, 3))
    D = int(rng.integers(0, max_degree + 1))
    if monomial is None:
        monomial = bool(rng.random() < 0.5)

    def make(r, c):
        if monomial:
            present = rng.random((r, c)) < 0.85
            return MonomialMatrix(
                np.where(present, rng.integers(0, 2, (r, c)), 0),
                np.where(present, rng.integers(0, D + 1, (r, c)), 0),
                present,
                D,
            )
        table = rng.integers(0, 4, (r, c, 2, D + 1)) * (rng.random((r, c, 2, D + 1)) < 0.2)
        return PolyMatrix(table.astype(np.int64))

    return make(n1, m), make(m, n2)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    """Remember one acceptance verdict and fail the calling test if it is negative."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, detail


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
