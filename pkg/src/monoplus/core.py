"""Randomised monotone min-plus product via quotient / remainder decomposition.

For a random prime p every entry of C = A * B is split as p * floor(C / p) + (C mod p).
The quotient comes from a combinatorial pass with range-chmin segment trees.
The remainder is rebuilt one bit per level, from the top level h down to 0.  At
level l the candidate terms are filtered through a bivariate polynomial matrix
product and the erroneous terms recorded in ``T_b`` are subtracted.

The output never depends on the random prime; only the amount of work does.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

import numpy as np

from monoplus.exponents import DEFAULT_MODEL, ExponentModel, omega_of
from monoplus.matrices import (
    INF,
    DimensionError,
    InstanceMeta,
    PreconditionError,
    assumption1_split,
    ext_add,
    first_monotonicity_violation,
    naive_minplus,
    normalize_A,
)
from monoplus.polymatmul import (
    BACKENDS,
    MonomialMatrix,
    build_Ap,
    build_Bp,
    extract_window,
    poly_matmul,
    windowed_product,
)
from monoplus.primes import is_prime, random_prime
from monoplus.segtree import ChminSegTree

log = logging.getLogger(__name__)

OFFSET_RADIUS = 10
MIN_ALPHA = 1e-6


class FallbackToNaive(Exception):
    """Parameters leave no room for the fast path; compute the product naively."""


@dataclass(frozen=True)
class AlgoParams:
    alpha: float
    p: int
    h: int
    offset_radius: int = OFFSET_RADIUS
    rng_seed: int = 0
    backend: str = "naive"
    check_invariants: bool = False

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if not (1 << (self.h - 1)) <= self.p < (1 << self.h):
            raise ValueError(f"h = {self.h} does not satisfy 2^(h-1) <= p < 2^h for p = {self.p}")
        if self.offset_radius < 0:
            raise ValueError("offset_radius must be non-negative")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    @classmethod
    def for_prime(cls, p: int, alpha: float = float("nan"), **kw) -> "AlgoParams":
        return cls(alpha=alpha, p=p, h=int(p).bit_length(), **kw)


def choose_params(
    meta: InstanceMeta,
    model: ExponentModel | None = None,
    seed: int = 0,
    *,
    omega: float | None = None,
    alpha_override: float | None = None,
    offset_radius: int = OFFSET_RADIUS,
    backend: str = "naive",
    check_invariants: bool = False,
) -> AlgoParams:
    """Balance n^(1+beta+mu-alpha) against n^(omega(beta)+alpha) and sample p.

    ``omega`` overrides the model's omega(beta) with a practical exponent.
    Raises FallbackToNaive when the balanced alpha is not positive or the prime
    range is empty.
    """
    if alpha_override is not None:
        alpha = float(alpha_override)
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
    else:
        if omega is None:
            omega = omega_of(model or DEFAULT_MODEL, meta.beta, extrapolate=True)
        raw = (1 + meta.beta + meta.mu - omega) / 2
        if raw < MIN_ALPHA:
            raise FallbackToNaive(f"alpha = {raw:.4f} leaves no gain over the naive product")
        alpha = min(raw, meta.mu)
    scale = max(meta.n, 1) ** alpha
    lo, hi = math.ceil(40 * scale), math.floor(80 * scale)
    p = random_prime(lo, hi, random.Random(seed))
    if p is None:
        raise FallbackToNaive(f"no prime in [{lo}, {hi}]")
    return AlgoParams(
        alpha=alpha,
        p=p,
        h=p.bit_length(),
        offset_radius=offset_radius,
        rng_seed=seed,
        backend=backend,
        check_invariants=check_invariants,
    )


# -- segments --------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    i: int
    k: int
    j0: int
    j1: int
    b: int


@dataclass
class Segments:
    """Column-major store of segments (i, k, [j0, j1]) tagged with their offset b."""

    i: np.ndarray
    k: np.ndarray
    j0: np.ndarray
    j1: np.ndarray
    b: np.ndarray

    @classmethod
    def empty(cls) -> "Segments":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy())

    def __len__(self) -> int:
        return len(self.i)

    def __iter__(self):
        for t in range(len(self)):
            yield Segment(int(self.i[t]), int(self.k[t]), int(self.j0[t]), int(self.j1[t]), int(self.b[t]))

    def sorted(self) -> "Segments":
        order = np.lexsort((self.j0, self.k, self.i))
        return Segments(self.i[order], self.k[order], self.j0[order], self.j1[order], self.b[order])

    def counts_by_offset(self, radius: int) -> np.ndarray:
        """Number of segments in each T_b, indexed by b + radius."""
        return np.bincount(self.b + radius, minlength=2 * radius + 1)


def _change_positions(M: np.ndarray) -> np.ndarray:
    """Sorted flat positions r * cols + j with M[r, j] != M[r, j - 1]."""
    rows, cols = M.shape
    if cols < 2:
        return np.zeros(0, dtype=np.int64)
    r, j = np.nonzero(M[:, 1:] != M[:, :-1])
    return r.astype(np.int64) * cols + j + 1


def _split(j0: np.ndarray, j1: np.ndarray, cuts, cols: int):
    """Cut every interval [j0, j1] at the change points of the given rows.

    ``cuts`` is a list of (row index per interval, change positions).  The cut
    points inside each interval are located by binary search.  Returns
    (parent index, s0, s1) for the resulting pieces, grouped by parent and
    ordered by s0.
    """
    n = len(j0)
    parents = [np.arange(n)]
    starts = [j0]
    for row, pos in cuts:
        base = row * cols
        lo = np.searchsorted(pos, base + j0, side="right")
        hi = np.searchsorted(pos, base + j1, side="right")
        cnt = hi - lo
        total = int(cnt.sum())
        if not total:
            continue
        par = np.repeat(np.arange(n), cnt)
        first = np.repeat(lo - (np.cumsum(cnt) - cnt), cnt)
        parents.append(par)
        starts.append(pos[first + np.arange(total)] - base[par])
    parent = np.concatenate(parents)
    start = np.concatenate(starts)
    order = np.lexsort((start, parent))
    parent, start = parent[order], start[order]
    keep = np.ones(len(parent), dtype=bool)
    keep[1:] = (parent[1:] != parent[:-1]) | (start[1:] != start[:-1])
    parent, start = parent[keep], start[keep]
    end = np.empty_like(start)
    same_next = np.zeros(len(parent), dtype=bool)
    same_next[:-1] = parent[1:] == parent[:-1]
    end[:-1] = start[1:] - 1
    end = np.where(same_next, end, j1[parent])
    return parent, start, end


# -- quotient --------------------------------------------------------------------

@dataclass(frozen=True)
class Quotient:
    A: np.ndarray
    B: np.ndarray
    p: int
    A_star: np.ndarray
    B_star: np.ndarray
    C_star: np.ndarray

    @property
    def A_mod(self) -> np.ndarray:
        return np.where(self.A != INF, self.A % self.p, INF)

    @property
    def B_mod(self) -> np.ndarray:
        return self.B % self.p


def _runs(row: np.ndarray) -> list[tuple[int, int]]:
    cuts = np.flatnonzero(row[1:] != row[:-1]) + 1
    bounds = np.concatenate(([0], cuts, [len(row)]))
    return [(int(bounds[t]), int(bounds[t + 1]) - 1) for t in range(len(bounds) - 1)]


def compute_quotient(A: np.ndarray, B: np.ndarray, p: int) -> Quotient:
    """C* = A* * B* with A* = floor(A / p), B* = floor(B / p), via range-chmin trees.

    One logical tree per output row; all rows share the update intervals (the
    runs of B*'s rows), so they are stored as a single batched tree.
    """
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    finite = A != INF
    A_star = np.where(finite, A // p, INF)
    B_star = B // p
    n1, n2 = A.shape[0], B.shape[1]
    tree = ChminSegTree(n2, width=n1)
    for k in range(A.shape[1]):
        if not finite[:, k].any():
            continue
        col = A_star[:, k]
        for j0, j1 in _runs(B_star[k]):
            tree.range_chmin(j0 + 1, j1 + 1, ext_add(col, B_star[k, j0]))
    return Quotient(A, B, p, A_star, B_star, tree.values())


# -- levels ----------------------------------------------------------------------

@dataclass
class LevelState:
    level: int
    C: np.ndarray
    segments: Segments
    max_selected_offset: int = 0


def level_matrix(M_mod: np.ndarray, level: int) -> np.ndarray:
    return np.where(M_mod != INF, M_mod >> level, INF)


def build_initial_state(q: Quotient, params: AlgoParams) -> LevelState:
    """Level h: A^(h), B^(h), C^(h) are zero, T_0 holds every quotient mismatch."""
    n2 = q.B.shape[1]
    C_h = np.where(q.C_star != INF, 0, INF)
    i, k = np.nonzero(q.A != INF)
    if not len(i) or n2 == 0:
        return LevelState(params.h, C_h, Segments.empty())
    j0 = np.zeros(len(i), dtype=np.int64)
    j1 = np.full(len(i), n2 - 1, dtype=np.int64)
    cuts = [(k, _change_positions(q.B_star)), (i, _change_positions(q.C_star))]
    parent, s0, s1 = _split(j0, j1, cuts, n2)
    si, sk = i[parent], k[parent]
    bad = ext_add(q.A_star[si, sk], q.B_star[sk, s0]) != q.C_star[si, s0]
    segs = Segments(si[bad], sk[bad], s0[bad], s1[bad], np.zeros(int(bad.sum()), dtype=np.int64))
    return LevelState(params.h, C_h, segs)


def _rows(M: MonomialMatrix, rows: slice) -> MonomialMatrix:
    return MonomialMatrix(M.x_deg[rows], M.y_deg[rows], M.present[rows], M.y_degree_bound)


def _window_counts(Ap: MonomialMatrix, Bp: MonomialMatrix, center: np.ndarray, radius: int, backend: str) -> np.ndarray:
    if backend == "naive":
        return windowed_product(Ap, Bp, center, radius)
    n1 = Ap.rows
    D = Ap.y_degree_bound + Bp.y_degree_bound + 1
    per_row = max(1, 3 * D * Bp.cols + 8 * D * Ap.cols)
    step = max(1, (1 << 23) // per_row)
    out = np.zeros((2 * radius + 1, 3, n1, Bp.cols), dtype=np.int64)
    for r0 in range(0, n1, step):
        rows = slice(r0, min(n1, r0 + step))
        Cp = poly_matmul(_rows(Ap, rows), Bp, backend)
        out[:, :, rows] = extract_window(Cp, center[rows], radius)
    return out


def _error_counts(segs: Segments, dA: np.ndarray, dB: np.ndarray, B_l: np.ndarray,
                  shape: tuple[int, int], radius: int) -> np.ndarray:
    """Per (b, x, i, j): how many terms of T_b at the previous level land on cell (i, j).

    Each stored segment is cut where B^(l) changes along its row, so that the
    x-degree contribution is constant on every piece; the pieces are then
    range-added with difference arrays.
    """
    n1, n2 = shape
    W = 2 * radius + 1
    if not len(segs):
        return np.zeros((W, 3, n1, n2), dtype=np.int64)
    parent, s0, s1 = _split(segs.j0, segs.j1, [(segs.k, _change_positions(B_l))], n2)
    i, k, b = segs.i[parent], segs.k[parent], segs.b[parent]
    x = dA[i, k] + dB[k, s0]
    head = ((b + radius) * 3 + x) * n1 + i
    size = W * 3 * n1 * (n2 + 1)
    diff = np.bincount(head * (n2 + 1) + s0, minlength=size) - np.bincount(head * (n2 + 1) + s1 + 1, minlength=size)
    return np.cumsum(diff.reshape(W, 3, n1, n2 + 1), axis=-1)[..., :n2]


def remainder_step(state: LevelState, q: Quotient, params: AlgoParams) -> LevelState:
    """Go from level l+1 to level l: filter, subtract erroneous terms, rebuild T_b."""
    l = state.level - 1
    R = params.offset_radius
    A_mod, B_mod = q.A_mod, q.B_mod
    A_l, A_up = level_matrix(A_mod, l), level_matrix(A_mod, l + 1)
    B_l, B_up = B_mod >> l, B_mod >> (l + 1)
    Ap, Bp = build_Ap(A_l, A_up), build_Bp(B_l, B_up)
    C_up = state.C
    n1, n2 = C_up.shape

    window = _window_counts(Ap, Bp, C_up, R, params.backend)
    errors = _error_counts(state.segments, Ap.x_deg, Bp.x_deg, B_l, (n1, n2), R)
    remaining = window - errors
    if (remaining < 0).any():
        raise RuntimeError(f"level {l}: erroneous terms exceed the filtered terms")

    # smallest surviving x-degree per offset; 3 marks "nothing left"
    present = remaining > 0
    lowest = np.where(present[:, 0], 0, np.where(present[:, 1], 1, np.where(present[:, 2], 2, 3)))
    offsets = np.arange(-R, R + 1)[:, None, None]
    finite_up = C_up != INF
    cand = np.where((lowest < 3) & finite_up[None], lowest + 2 * (np.where(finite_up, C_up, 0)[None] + offsets), INF)
    best_b = np.argmin(cand, axis=0)
    C_l = np.min(cand, axis=0)
    C_l = np.where(q.C_star != INF, C_l, INF)
    chosen = np.abs(best_b[C_l != INF] - R)
    max_sel = int(chosen.max(initial=0))

    segs = state.segments
    if len(segs):
        cuts = [(segs.k, _change_positions(B_l)), (segs.i, _change_positions(C_l))]
        parent, s0, s1 = _split(segs.j0, segs.j1, cuts, n2)
        i, k = segs.i[parent], segs.k[parent]
        v = A_l[i, k] + B_l[k, s0] - C_l[i, s0]
        keep = (C_l[i, s0] != INF) & (np.abs(v) <= R)
        new = Segments(i[keep], k[keep], s0[keep], s1[keep], v[keep]).sorted()
    else:
        new = Segments.empty()
    return LevelState(l, C_l, new, max_sel)


# -- invariant checking ----------------------------------------------------------

@dataclass
class InvariantReport:
    violations: dict[str, int] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)
    max_witness_offset: int = 0
    levels_checked: int = 0

    def flag(self, kind: str, count: int, detail: str) -> None:
        if count:
            self.violations[kind] = self.violations.get(kind, 0) + int(count)
            if len(self.messages) < 20:
                self.messages.append(f"{kind}: {detail}")

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "InvariantReport") -> None:
        for kind, cnt in other.violations.items():
            self.violations[kind] = self.violations.get(kind, 0) + cnt
        self.messages.extend(other.messages[: max(0, 20 - len(self.messages))])
        self.max_witness_offset = max(self.max_witness_offset, other.max_witness_offset)
        self.levels_checked += other.levels_checked


class LevelChecker:
    """Brute-force checks of each level against the true product (debug mode only)."""

    def __init__(self, q: Quotient, radius: int):
        self.q = q
        self.R = radius
        self.C = naive_minplus(q.A, q.B)
        self.finite = self.C != INF
        self.C_mod = np.where(self.finite, self.C % q.p, 0)
        Af = q.A != INF
        self.A_fin = Af
        self.mismatch = Af[:, :, None] & (ext_add(q.A_star[:, :, None], q.B_star[None]) != q.C_star[:, None, :])
        self.witness = Af[:, :, None] & (ext_add(q.A[:, :, None], q.B[None]) == self.C[:, None, :])
        self.prev_cells = None
        self.prev_C = None
        self.report = InvariantReport()

    def check(self, state: LevelState) -> None:
        q, R, l = self.q, self.R, state.level
        rep = self.report
        C_l = state.C
        fin = self.finite
        rep.flag("inf_pattern", int(((C_l != INF) != fin).sum()), f"level {l}: C^(l) finiteness differs from C")

        span = 2 * ((1 << l) - 1)
        lo = (self.C_mod - span) // (1 << l)
        hi = (self.C_mod + span) // (1 << l)
        bad = fin & ((C_l < lo) | (C_l > hi))
        rep.flag("property1", int(bad.sum()), f"level {l}: {int(bad.sum())} cells outside the rounding band")

        same_q = (q.C_star[:, 1:] == q.C_star[:, :-1]) & fin[:, 1:] & fin[:, :-1]
        dec = same_q & (C_l[:, 1:] < C_l[:, :-1])
        rep.flag("property2", int(dec.sum()), f"level {l}: C^(l) decreases inside a constant C* run")

        if self.prev_C is not None:
            delta = np.where(fin, C_l - 2 * np.where(fin, self.prev_C, 0), 0)
            out = fin & ((delta < -7) | (delta > 8))
            rep.flag("level_doubling", int(out.sum()), f"level {l}: C^(l) - 2 C^(l+1) outside [-7, 8]")

        A_l = level_matrix(q.A_mod, l)
        B_l = q.B_mod >> l
        with np.errstate(over="ignore"):
            v = np.where(self.A_fin[:, :, None], np.where(self.A_fin, A_l, 0)[:, :, None] + B_l[None], 0)
            v = np.where(fin[:, None, :], v - np.where(fin, C_l, 0)[:, None, :], 0)
        wv = np.abs(v[self.witness])
        rep.max_witness_offset = max(rep.max_witness_offset, int(wv.max(initial=0)))
        rep.flag("existence_of_b", int((wv > R).sum()), f"level {l}: witness offset beyond {R}")

        cells = self.mismatch & (np.abs(v) <= R)
        if self.prev_cells is not None:
            escaped = cells & ~self.prev_cells
            rep.flag("coverage", int(escaped.sum()), f"level {l}: erroneous cells not covered at level {l + 1}")
        self._check_segments(state, cells, v, B_l)
        self.prev_cells = cells
        self.prev_C = C_l
        rep.levels_checked += 1

    def _check_segments(self, state: LevelState, cells: np.ndarray, v: np.ndarray, B_l: np.ndarray) -> None:
        q, l, segs = self.q, state.level, state.segments
        n1, m, n2 = cells.shape
        cover = np.zeros((n1, m, n2 + 1), dtype=np.int64)
        label = np.zeros((n1, m, n2 + 1), dtype=np.int64)
        np.add.at(cover, (segs.i, segs.k, segs.j0), 1)
        np.add.at(cover, (segs.i, segs.k, segs.j1 + 1), -1)
        np.add.at(label, (segs.i, segs.k, segs.j0), segs.b)
        np.add.at(label, (segs.i, segs.k, segs.j1 + 1), -segs.b)
        cover = np.cumsum(cover, axis=-1)[..., :n2]
        label = np.cumsum(label, axis=-1)[..., :n2]
        self.report.flag("T_exact", int((cover != cells.astype(np.int64)).sum()),
                         f"level {l}: stored T_b cells differ from the definition")
        self.report.flag("T_offset", int((cells & (label != v)).sum()), f"level {l}: segment stored under the wrong b")

        broken = 0
        for M, rows in ((B_l, segs.k), (q.B_star, segs.k), (state.C, segs.i), (q.C_star, segs.i)):
            pos = _change_positions(M)
            base = rows * n2
            inside = np.searchsorted(pos, base + segs.j1, side="right") - np.searchsorted(pos, base + segs.j0, side="right")
            broken += int((inside > 0).sum())
        self.report.flag("segment_shape", broken, f"level {l}: segment not constant in B^(l), B*, C^(l), C*")


# -- driver ----------------------------------------------------------------------

@dataclass
class RunStats:
    fallback: bool = False
    alpha: float = float("nan")
    p: int = 0
    levels: int = 0
    subproducts: int = 0
    max_Tb: int = 0
    max_selected_offset: int = 0
    tb_by_level: list[int] = field(default_factory=list)
    invariants: InvariantReport | None = None


@dataclass
class MonotoneResult:
    C: np.ndarray
    stats: RunStats


def _solve_reduced(A: np.ndarray, B: np.ndarray, params: AlgoParams, stats: RunStats) -> np.ndarray:
    """Product of one pair satisfying the residue assumption."""
    q = compute_quotient(A, B, params.p)
    state = build_initial_state(q, params)
    checker = LevelChecker(q, params.offset_radius) if params.check_invariants else None
    if checker:
        checker.check(state)
    R = params.offset_radius
    sizes = [int(state.segments.counts_by_offset(R).max(initial=0))]
    while state.level > 0:
        state = remainder_step(state, q, params)
        sizes.append(int(state.segments.counts_by_offset(R).max(initial=0)))
        stats.max_selected_offset = max(stats.max_selected_offset, state.max_selected_offset)
        if checker:
            checker.check(state)
    stats.max_Tb = max(stats.max_Tb, max(sizes))
    if len(stats.tb_by_level) < len(sizes):
        stats.tb_by_level.extend([0] * (len(sizes) - len(stats.tb_by_level)))
    for t, s in enumerate(sizes):
        stats.tb_by_level[t] = max(stats.tb_by_level[t], s)
    if checker:
        stats.invariants.merge(checker.report)
    with np.errstate(over="ignore"):
        return np.where(q.C_star != INF, params.p * q.C_star + state.C, INF)


def solve(
    A: np.ndarray,
    B: np.ndarray,
    meta: InstanceMeta | None = None,
    params: AlgoParams | None = None,
    *,
    seed: int = 0,
    model: ExponentModel | None = None,
) -> MonotoneResult:
    """A * B for row-monotone B, with run statistics.

    Without ``params`` they are drawn by :func:`choose_params`; when that signals
    a fallback the naive product is returned (``stats.fallback``).
    """
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if meta is None:
        meta = InstanceMeta.from_matrices(A, B)
    why = first_monotonicity_violation(B, meta.value_bound)
    if why is not None:
        raise PreconditionError(f"B is not row-monotone: {why}")

    stats = RunStats()
    if params is None:
        try:
            params = choose_params(meta, model, seed)
        except FallbackToNaive as exc:
            log.info("falling back to the naive product: %s", exc)
            stats.fallback = True
            return MonotoneResult(naive_minplus(A, B), stats)
    stats.alpha, stats.p, stats.levels = params.alpha, params.p, params.h
    if params.check_invariants:
        stats.invariants = InvariantReport()
    n1, n2 = A.shape[0], B.shape[1]
    if A.shape[1] == 0 or n1 == 0 or n2 == 0:
        return MonotoneResult(naive_minplus(A, B), stats)

    A_norm, row_offsets = normalize_A(A, meta.value_bound)
    C = np.full((n1, n2), INF, dtype=np.int64)
    for pair in assumption1_split(A_norm, B, params.p):
        if (pair.A == INF).all():
            continue
        stats.subproducts += 1
        sub = _solve_reduced(pair.A, pair.B, params, stats)
        np.minimum(C, ext_add(sub, pair.shift), out=C)
    return MonotoneResult(ext_add(C, row_offsets[:, None]), stats)


def minplus_monotone(A, B, meta=None, params=None, *, seed: int = 0, model=None) -> np.ndarray:
    return solve(A, B, meta, params, seed=seed, model=model).C
