"""Extended-integer matrices and the structural operations around the min-plus product.

Matrices are plain ``numpy.int64`` arrays.  ``INF`` (the largest int64) is the
+infinity sentinel; finite magnitudes are capped at ``MAX_FINITE`` so that the sum
of two finite entries can never reach the sentinel.

Indexing is 0-based here.  Formulas documented with 1-based column numbers
(``delta * j``) are translated with ``j + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from monoplus.primes import is_prime

INF = np.iinfo(np.int64).max
MAX_FINITE = 2**61


class DimensionError(ValueError):
    pass


class PreconditionError(ValueError):
    """Input violates a structural requirement (monotone, bounded-difference, prime...)."""


@dataclass(frozen=True)
class InstanceMeta:
    n: int
    m: int
    beta: float
    mu: float
    value_bound: int

    def __post_init__(self):
        if self.beta < 0 or self.mu < 0:
            raise ValueError("beta and mu must be non-negative")
        if self.value_bound < 0:
            raise ValueError("value_bound must be non-negative")

    @classmethod
    def from_matrices(cls, A: np.ndarray, B: np.ndarray, value_bound: int | None = None) -> "InstanceMeta":
        """Derive beta = log_n m and mu = log_n value_bound from concrete operands."""
        n, m = A.shape
        if value_bound is None:
            finite = B[B != INF]
            value_bound = int(finite.max()) if finite.size else 0
        elif B.size and int(B[B != INF].max(initial=0)) > value_bound:
            raise ValueError("value_bound is smaller than the largest entry of B")
        if n > 1:
            beta = math.log(max(m, 1)) / math.log(n)
            mu = math.log(max(value_bound, 1)) / math.log(n)
        else:
            beta, mu = 1.0, 1.0
        return cls(n=n, m=m, beta=beta, mu=mu, value_bound=int(value_bound))


def as_matrix(rows: Iterable[Sequence]) -> np.ndarray:
    """Build an int64 matrix from nested sequences; ``inf``/``None``/``"inf"`` become INF."""
    out = []
    for row in rows:
        vals = []
        for v in row:
            if v is None or (isinstance(v, str) and v.strip().lower() == "inf") or (
                isinstance(v, float) and math.isinf(v) and v > 0
            ):
                vals.append(INF)
            else:
                vals.append(int(v))
        out.append(vals)
    arr = np.array(out, dtype=np.int64)
    if arr.ndim != 2:
        arr = arr.reshape(len(out), -1)
    check_range(arr)
    return arr


def check_range(M: np.ndarray) -> None:
    finite = M[M != INF]
    if finite.size and int(np.abs(finite).max()) > MAX_FINITE:
        raise OverflowError(f"finite entries must lie within +-{MAX_FINITE}")


def ext_add(a, b):
    """Sentinel-aware elementwise addition (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inf = (a == INF) | (b == INF)
    with np.errstate(over="ignore"):
        s = a + b
    return np.where(inf, INF, s)


def naive_minplus(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Brute-force min-plus product, C[i, j] = min_k A[i, k] + B[k, j]."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    C = np.full((A.shape[0], B.shape[1]), INF, dtype=np.int64)
    for k in range(A.shape[1]):
        np.minimum(C, ext_add(A[:, k, None], B[None, k, :]), out=C)
    return C


def minplus_identity(n: int) -> np.ndarray:
    eye = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(eye, 0)
    return eye


def is_row_monotone(B: np.ndarray, bound: int) -> bool:
    """True iff every row is non-decreasing and all entries are finite, in [0, bound]."""
    B = np.asarray(B)
    if B.size == 0:
        return True
    if (B == INF).any() or B.min() < 0 or B.max() > bound:
        return False
    return bool((np.diff(B, axis=1) >= 0).all())


def first_monotonicity_violation(B: np.ndarray, bound: int | None = None) -> str | None:
    """Describe the first cell breaking row-monotonicity, or None."""
    B = np.asarray(B)
    bad = np.argwhere(B == INF)
    if bad.size:
        r, c = bad[0]
        return f"row {r} column {c} is +inf"
    bad = np.argwhere(B < 0)
    if bad.size:
        r, c = bad[0]
        return f"row {r} column {c} is negative ({B[r, c]})"
    if bound is not None:
        bad = np.argwhere(B > bound)
        if bad.size:
            r, c = bad[0]
            return f"row {r} column {c} exceeds bound {bound} ({B[r, c]})"
    bad = np.argwhere(np.diff(B, axis=1) < 0)
    if bad.size:
        r, c = bad[0]
        return f"row {r} decreases between columns {c} and {c + 1} ({B[r, c]} > {B[r, c + 1]})"
    return None


def is_bounded_difference(X: np.ndarray, delta: int) -> bool:
    return _bd_violation(np.asarray(X), delta) is None


def _bd_violation(X: np.ndarray, delta: int) -> str | None:
    if (X == INF).any():
        r, c = np.argwhere(X == INF)[0]
        return f"cell ({r}, {c}) is +inf"
    horiz = np.argwhere(np.abs(np.diff(X, axis=1)) > delta)
    if horiz.size:
        r, c = horiz[0]
        return f"cells ({r}, {c}) and ({r}, {c + 1}) differ by more than {delta}"
    vert = np.argwhere(np.abs(np.diff(X, axis=0)) > delta)
    if vert.size:
        r, c = vert[0]
        return f"cells ({r}, {c}) and ({r + 1}, {c}) differ by more than {delta}"
    return None


@dataclass(frozen=True)
class AffineOffset:
    """X'[i][j] = X[i][j] + delta * (j + 1) - constant (0-based j)."""

    delta: int
    constant: int

    def apply(self, X: np.ndarray) -> np.ndarray:
        cols = np.arange(1, X.shape[1] + 1, dtype=np.int64)
        return X + self.delta * cols[None, :] - self.constant

    def restore_product(self, C_prime: np.ndarray) -> np.ndarray:
        """Undo the offset on A * X' when X was the right operand."""
        cols = np.arange(1, C_prime.shape[1] + 1, dtype=np.int64)
        out = C_prime - self.delta * cols[None, :] + self.constant
        return np.where(C_prime == INF, INF, out)


def bd_to_monotone(X: np.ndarray, delta: int) -> tuple[np.ndarray, AffineOffset]:
    """Turn a delta-bounded-difference matrix into a row-monotone one.

    Uses X' = X + delta*j - X[1][1].  When that would leave negative entries (rows
    far below the first one), the constant is lowered to the minimum of
    X + delta*j so the result stays non-negative.
    """
    X = np.asarray(X, dtype=np.int64)
    why = _bd_violation(X, delta)
    if why is not None:
        raise PreconditionError(f"matrix is not {delta}-bounded-difference: {why}")
    if X.size == 0:
        return X.copy(), AffineOffset(delta, 0)
    cols = np.arange(1, X.shape[1] + 1, dtype=np.int64)
    shifted = X + delta * cols[None, :]
    constant = min(int(X[0, 0]), int(shifted.min()))
    offset = AffineOffset(delta, constant)
    return offset.apply(X), offset


def normalize_A(A: np.ndarray, value_bound: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift each row of A to start at 0 and drop entries that can never be the minimum.

    Returns (A', r) with A'[i, k] = A[i, k] - r[i]; entries above ``value_bound``
    become INF.  Valid whenever B's entries lie in [0, value_bound].
    """
    A = np.asarray(A, dtype=np.int64)
    finite = A != INF
    if A.shape[1] == 0:
        return A.copy(), np.zeros(A.shape[0], dtype=np.int64)
    masked = np.where(finite, A, np.iinfo(np.int64).max)
    r = masked.min(axis=1)
    r = np.where(finite.any(axis=1), r, 0)
    out = np.where(finite, A - r[:, None], INF)
    out = np.where(out > value_bound, INF, out)
    return out, r


def is_column_monotone(A: np.ndarray, bound: int | None = None) -> bool:
    A = np.asarray(A)
    if bound is None:
        bound = int(A.max(initial=0)) if not (A == INF).any() else -1
    return is_row_monotone(A.T, bound)


def transpose_product(A: np.ndarray, B: np.ndarray, solver: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      bound: int | None = None) -> np.ndarray:
    """A * B for column-monotone A, via (A * B)^T = B^T * A^T."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if not is_column_monotone(A, bound):
        why = first_monotonicity_violation(A.T, bound)
        raise PreconditionError(f"A is not column-monotone: {why} (in the transpose)")
    return np.ascontiguousarray(solver(np.ascontiguousarray(B.T), np.ascontiguousarray(A.T)).T)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class SplitPair:
    """One of the nine reduced instances.

    The true contribution of the pair is ``A * B + shift`` where
    ``shift = a_shift + b_shift``.  ``b_original`` flags cells of B copied from
    the input (the rest were filled in artificially).
    """

    A: np.ndarray
    B: np.ndarray
    a_shift: int
    b_shift: int
    b_original: np.ndarray

    @property
    def shift(self) -> int:
        return self.a_shift + self.b_shift


def assumption1_split(A: np.ndarray, B: np.ndarray, p: int) -> list[SplitPair]:
    """Split (A, B) into nine pairs whose residues mod p stay below p/3.

    The elementwise minimum over the pairs of ``A_s * B_s + shift`` equals A * B.
    """
    if not is_prime(p):
        raise PreconditionError(f"p = {p} is not prime")
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if (B == INF).any() or (B.size and B.min() < 0) or (np.diff(B, axis=1) < 0).any():
        raise PreconditionError("B must be row-monotone with finite non-negative entries")
    finite = A != INF
    if finite.any() and A[finite].min() < 0:
        raise PreconditionError("A must have non-negative finite entries (normalize first)")

    third, two_thirds = ceil_div(p, 3), ceil_div(2 * p, 3)
    # residue classes: r < p/3  <=>  3r < p, and so on (exact integer tests)
    a_res = np.where(finite, A % p, 0)
    a_cls = np.where(3 * a_res < p, 0, np.where(3 * a_res < 2 * p, 1, 2))
    a_parts = []
    for cls, shift in ((0, 0), (1, third), (2, two_thirds)):
        keep = finite & (a_cls == cls)
        a_parts.append((np.where(keep, A - shift, INF), shift))

    q, b_res = np.divmod(B, p)
    b_cls = np.where(3 * b_res < p, 0, np.where(3 * b_res < 2 * p, 1, 2))
    base, nxt = p * q, p * (q + 1)
    b1 = np.where(b_cls == 0, B, nxt)
    b2 = np.where(b_cls == 0, base + third, np.where(b_cls == 1, B, nxt + third))
    b3 = np.where(b_cls == 2, B, base + two_thirds)
    b_parts = [(b1, 0, b_cls == 0), (b2 - third, third, b_cls == 1), (b3 - two_thirds, two_thirds, b_cls == 2)]

    return [
        SplitPair(A=a_mat, B=b_mat, a_shift=sa, b_shift=sb, b_original=orig)
        for a_mat, sa in a_parts
        for b_mat, sb, orig in b_parts
    ]


def satisfies_assumption1(A: np.ndarray, B: np.ndarray, p: int) -> bool:
    """Residues of finite A and of B are < p/3, B finite, rows of B non-decreasing."""
    finite = A != INF
    if finite.any() and (A[finite].min() < 0 or (3 * (A[finite] % p) >= p).any()):
        return False
    if (B == INF).any() or (B.size and B.min() < 0):
        return False
    if (3 * (B % p) >= p).any():
        return False
    return bool((np.diff(B, axis=1) >= 0).all())


# -- text format ---------------------------------------------------------------

def format_matrix(M: np.ndarray) -> str:
    rows, cols = M.shape
    lines = [f"{rows} {cols}"]
    for row in M:
        lines.append(" ".join("inf" if v == INF else str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``rows cols`` followed by ``rows`` lines of integers or ``inf``."""
    lines = text.split("\n")
    if not lines[0].strip():
        raise ValueError("empty matrix file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"bad header line: {lines[0]!r}")
    rows, cols = int(head[0]), int(head[1])
    if rows < 0 or cols < 0:
        raise ValueError("negative dimensions")
    body = lines[1:]
    # a row of a zero-column matrix is an empty line, so only trailing blanks are dropped
    while len(body) > rows and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        raise ValueError(f"expected {rows} rows, found {len(body)}")
    M = np.empty((rows, cols), dtype=np.int64)
    for r, line in enumerate(body):
        toks = line.split()
        if len(toks) != cols:
            raise ValueError(f"row {r}: expected {cols} entries, found {len(toks)}")
        for c, tok in enumerate(toks):
            M[r, c] = INF if tok == "inf" else int(tok)
    check_range(M)
    return M


def read_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(path, M: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_matrix(M))
