"""Products of matrices whose entries are polynomials in x (degree <= 1) and y.

Coefficient tables are dense int64 arrays shaped ``(rows, cols, x_terms, y_terms)``.
Matrices built by the min-plus algorithm hold a single monomial (or zero) per
entry; :class:`MonomialMatrix` keeps those as exponent arrays and every backend
accepts either form.

Backends:

``naive``
    Direct accumulation of every term.  Exact; the reference.
``split3-eval``
    Split both operands by x-degree and form the three x-coefficients
    A0B0, A0B1 + A1B0, A1B1 (Karatsuba style) as univariate-y products, each
    evaluated at the N-th roots of unity of an NTT-friendly prime, multiplied
    pointwise as integer matrices and interpolated back.
``split3-pack``
    Same split; each y-polynomial is packed into one wide integer (stride
    ``s`` bits per coefficient) and the products are plain integer matrix
    products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monoplus.matrices import INF, DimensionError
from monoplus.primes import is_prime, primitive_root

BACKENDS = ("naive", "split3-eval", "split3-pack")

# primes of the form c * 2^k + 1 (k >= 16), ascending
NTT_PRIMES = (65537, 786433, 7340033, 23068673, 104857601, 167772161, 469762049, 998244353)


class PackingOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class PolyMatrix:
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.ndim != 4:
            raise ValueError("coefficient table must be (rows, cols, x_terms, y_terms)")

    @classmethod
    def zeros(cls, rows: int, cols: int, x_terms: int, y_degree_bound: int) -> "PolyMatrix":
        return cls(np.zeros((rows, cols, x_terms, y_degree_bound + 1), dtype=np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[:2]

    @property
    def rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[1]

    @property
    def x_degree_bound(self) -> int:
        return self.coeffs.shape[2] - 1

    @property
    def y_degree_bound(self) -> int:
        return self.coeffs.shape[3] - 1

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.coeffs[i, j]

    def to_poly(self) -> "PolyMatrix":
        return self


@dataclass(frozen=True)
class MonomialMatrix:
    """Entry (i, k) is x^x_deg * y^y_deg when ``present``, else the zero polynomial."""

    x_deg: np.ndarray
    y_deg: np.ndarray
    present: np.ndarray
    y_degree_bound: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.present.shape

    @property
    def rows(self) -> int:
        return self.present.shape[0]

    @property
    def cols(self) -> int:
        return self.present.shape[1]

    @property
    def x_degree_bound(self) -> int:
        return 1

    def to_poly(self) -> PolyMatrix:
        out = PolyMatrix.zeros(self.rows, self.cols, 2, self.y_degree_bound)
        i, k = np.nonzero(self.present)
        out.coeffs[i, k, self.x_deg[i, k], self.y_deg[i, k]] = 1
        return out


def _build(M_l: np.ndarray, M_l1: np.ndarray, y_degree_bound: int | None, allow_inf: bool) -> MonomialMatrix:
    M_l = np.asarray(M_l, dtype=np.int64)
    M_l1 = np.asarray(M_l1, dtype=np.int64)
    if M_l.shape != M_l1.shape:
        raise DimensionError(f"level matrices differ in shape: {M_l.shape} vs {M_l1.shape}")
    present = M_l != INF
    if not allow_inf and not present.all():
        raise ValueError("B-side level matrices must be finite")
    if ((M_l1 == INF) != ~present).any():
        raise ValueError("+inf pattern differs between consecutive levels")
    x = np.where(present, M_l - 2 * np.where(present, M_l1, 0), 0)
    if ((x != 0) & (x != 1)).any():
        i, k = np.argwhere((x != 0) & (x != 1))[0]
        raise ValueError(f"level difference at ({i}, {k}) is {x[i, k]}, expected 0 or 1")
    y = np.where(present, M_l1, 0)
    top = int(y.max(initial=0))
    if y_degree_bound is None:
        y_degree_bound = top
    elif top > y_degree_bound:
        raise ValueError(f"y-degree {top} exceeds the declared bound {y_degree_bound}")
    return MonomialMatrix(x, y, present, y_degree_bound)


def build_Ap(A_l: np.ndarray, A_l1: np.ndarray, y_degree_bound: int | None = None) -> MonomialMatrix:
    """x^(A_l - 2 A_l1) * y^A_l1 per finite cell, zero polynomial where A is +inf."""
    return _build(A_l, A_l1, y_degree_bound, allow_inf=True)


def build_Bp(B_l: np.ndarray, B_l1: np.ndarray, y_degree_bound: int | None = None) -> MonomialMatrix:
    return _build(B_l, B_l1, y_degree_bound, allow_inf=False)


# -- coefficient bounds ----------------------------------------------------------

def _max_mass(M) -> int:
    if isinstance(M, MonomialMatrix):
        return int(M.present.any())
    return int(M.coeffs.sum(axis=(2, 3)).max(initial=0))


def _max_coef(M) -> int:
    if isinstance(M, MonomialMatrix):
        return int(M.present.any())
    return int(M.coeffs.max(initial=0))


def coefficient_bound(Ap, Bp) -> int:
    """Upper bound on any coefficient of Ap @ Bp (for monomial inputs: the inner dimension)."""
    return Ap.cols * _max_mass(Ap) * _max_coef(Bp)


# -- public entry point ----------------------------------------------------------

def poly_matmul(Ap, Bp, backend: str = "naive", stride: int | None = None) -> PolyMatrix:
    """Exact product of two polynomial matrices; output has x_terms = 3."""
    if Ap.cols != Bp.rows:
        raise DimensionError(f"cannot multiply {Ap.shape} by {Bp.shape}")
    if Ap.x_degree_bound > 1 or Bp.x_degree_bound > 1:
        raise ValueError("input x-degree must be at most 1")
    if backend == "naive":
        return _naive(Ap, Bp)
    if backend == "split3-eval":
        return _split3_eval(Ap, Bp)
    if backend == "split3-pack":
        return _split3_pack(Ap, Bp, stride)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def _out_degree(Ap, Bp) -> int:
    return Ap.y_degree_bound + Bp.y_degree_bound


def _naive(Ap, Bp) -> PolyMatrix:
    n1, m, n2 = Ap.rows, Ap.cols, Bp.cols
    D = _out_degree(Ap, Bp)
    if isinstance(Ap, MonomialMatrix) and isinstance(Bp, MonomialMatrix):
        size = n1 * n2 * 3 * (D + 1)
        flat = np.zeros(size, dtype=np.int64)
        base = (np.arange(n1)[:, None, None] * n2 + np.arange(n2)[None, None, :]) * 3
        for ks in _chunks(m, n1 * n2):
            x = Ap.x_deg[:, ks, None] + Bp.x_deg[None, ks, :]
            y = Ap.y_deg[:, ks, None] + Bp.y_deg[None, ks, :]
            ok = Ap.present[:, ks, None] & Bp.present[None, ks, :]
            idx = ((base + x) * (D + 1) + y)[ok]
            flat += np.bincount(idx, minlength=size)
        return PolyMatrix(flat.reshape(n1, n2, 3, D + 1))
    A = Ap.to_poly().coeffs
    B = Bp.to_poly().coeffs
    out = np.zeros((n1, n2, 3, D + 1), dtype=np.int64)
    DB = B.shape[3] - 1
    for xa in range(A.shape[2]):
        for ya in range(A.shape[3]):
            a = A[:, :, xa, ya]
            if not a.any():
                continue
            out[:, :, xa:xa + B.shape[2], ya:ya + DB + 1] += np.einsum("ik,kjxy->ijxy", a, B)
    return PolyMatrix(out)


def _chunks(m: int, per_k: int, budget: int = 1 << 22):
    step = max(1, budget // max(per_k, 1))
    for k0 in range(0, m, step):
        yield slice(k0, min(m, k0 + step))


def _x_slices(M, x: int, n_terms: int) -> np.ndarray:
    """Dense y-coefficient table (rows, cols, n_terms) of the x^x part."""
    if isinstance(M, MonomialMatrix):
        out = np.zeros((M.rows, M.cols, n_terms), dtype=np.int64)
        i, k = np.nonzero(M.present & (M.x_deg == x))
        out[i, k, M.y_deg[i, k]] = 1
        return out
    c = M.coeffs
    out = np.zeros((M.rows, M.cols, n_terms), dtype=np.int64)
    if x < c.shape[2]:
        out[:, :, :c.shape[3]] = c[:, :, x, :]
    return out


# -- evaluation / interpolation --------------------------------------------------

def _pick_ntt_prime(n_points: int, coef_bound: int, inner: int) -> int:
    for q in NTT_PRIMES:
        if (q - 1) % n_points == 0 and q > coef_bound and inner * (q - 1) ** 2 < 2**63:
            return q
    raise OverflowError(
        f"no NTT prime supports {n_points} points, coefficients up to {coef_bound} and inner dimension {inner}"
    )


def ntt(a: np.ndarray, q: int, root: int, inverse: bool = False) -> np.ndarray:
    """Number-theoretic transform along the last axis (length a power of two)."""
    N = a.shape[-1]
    if N & (N - 1):
        raise ValueError("transform length must be a power of two")
    if inverse:
        root = pow(root, q - 2, q)
    bits = N.bit_length() - 1
    rev = np.zeros(N, dtype=np.int64)
    for b in range(bits):
        rev |= ((np.arange(N) >> b) & 1) << (bits - 1 - b)
    a = np.asarray(a, dtype=np.int64)[..., rev] % q
    lead = a.shape[:-1]
    length = 2
    while length <= N:
        half = length // 2
        w = pow(root, N // length, q)
        tw = np.empty(half, dtype=np.int64)
        acc = 1
        for t in range(half):
            tw[t] = acc
            acc = acc * w % q
        blocks = a.reshape(lead + (N // length, length))
        u = blocks[..., :half]
        v = blocks[..., half:] * tw % q
        a = np.concatenate(((u + v) % q, (u - v) % q), axis=-1).reshape(lead + (N,))
        length *= 2
    if inverse:
        a = a * pow(N, q - 2, q) % q
    return a


def _evaluate(M, x: int, n_points: int, q: int, root: int) -> np.ndarray:
    """Values of the x^x part of every entry at root^t, shape (n_points, rows, cols)."""
    if isinstance(M, MonomialMatrix):
        powers = np.empty(n_points, dtype=np.int64)
        acc = 1
        for t in range(n_points):
            powers[t] = acc
            acc = acc * root % q
        keep = M.present & (M.x_deg == x)
        expo = (np.arange(n_points)[:, None, None] * M.y_deg[None]) % n_points
        return np.where(keep[None], powers[expo], 0)
    table = _x_slices(M, x, n_points)
    return np.moveaxis(ntt(table, q, root), -1, 0)


def _modmatmul(A: np.ndarray, B: np.ndarray, q: int) -> np.ndarray:
    return np.matmul(A, B) % q


def _split3_eval(Ap, Bp) -> PolyMatrix:
    D = _out_degree(Ap, Bp)
    N = 1
    while N < D + 1:
        N *= 2
    q = _pick_ntt_prime(N, coefficient_bound(Ap, Bp), Ap.cols)
    root = pow(primitive_root(q), (q - 1) // N, q)
    a0, a1 = (_evaluate(Ap, x, N, q, root) for x in (0, 1))
    b0, b1 = (_evaluate(Bp, x, N, q, root) for x in (0, 1))
    c0 = _modmatmul(a0, b0, q)
    c2 = _modmatmul(a1, b1, q)
    mid = (_modmatmul((a0 + a1) % q, (b0 + b1) % q, q) - c0 - c2) % q
    out = np.empty((Ap.rows, Bp.cols, 3, D + 1), dtype=np.int64)
    for x, vals in enumerate((c0, mid, c2)):
        coeffs = ntt(np.moveaxis(vals, 0, -1), q, root, inverse=True)
        out[:, :, x, :] = coeffs[..., :D + 1]
    return PolyMatrix(out)


# -- integer packing -------------------------------------------------------------

def default_stride(inner: int) -> int:
    """ceil(log2(inner + 1)) bits: enough for counts up to the inner dimension."""
    return max(1, int(inner).bit_length())


def _pack(table: np.ndarray, stride: int) -> np.ndarray:
    rows, cols, terms = table.shape
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        for k in range(cols):
            v = 0
            for e in np.flatnonzero(table[i, k]):
                v += int(table[i, k, e]) << (stride * int(e))
            out[i, k] = v
    return out


def _unpack(packed: np.ndarray, stride: int, terms: int) -> np.ndarray:
    rows, cols = packed.shape
    mask = (1 << stride) - 1
    out = np.zeros((rows, cols, terms), dtype=np.int64)
    for i in range(rows):
        for j in range(cols):
            v = int(packed[i, j])
            e = 0
            while v and e < terms:
                out[i, j, e] = v & mask
                v >>= stride
                e += 1
    return out


def _split3_pack(Ap, Bp, stride: int | None) -> PolyMatrix:
    s = default_stride(Ap.cols) if stride is None else int(stride)
    bound = coefficient_bound(Ap, Bp)
    if bound > (1 << s) - 1:
        raise PackingOverflowError(
            f"coefficients may reach {bound} but stride {s} holds at most {(1 << s) - 1}; "
            "use the 'naive' or 'split3-eval' backend instead"
        )
    D = _out_degree(Ap, Bp)
    a = [_pack(_x_slices(Ap, x, Ap.y_degree_bound + 1), s) for x in (0, 1)]
    b = [_pack(_x_slices(Bp, x, Bp.y_degree_bound + 1), s) for x in (0, 1)]
    out = np.empty((Ap.rows, Bp.cols, 3, D + 1), dtype=np.int64)
    out[:, :, 0] = _unpack(a[0].dot(b[0]), s, D + 1)
    out[:, :, 1] = _unpack(a[0].dot(b[1]), s, D + 1) + _unpack(a[1].dot(b[0]), s, D + 1)
    out[:, :, 2] = _unpack(a[1].dot(b[1]), s, D + 1)
    return PolyMatrix(out)


# -- y-window extraction ---------------------------------------------------------

def extract_window(Cp: PolyMatrix, center: np.ndarray, radius: int) -> np.ndarray:
    """Coefficient triples at y = center + b for b in [-radius, radius].

    Returns shape (2*radius + 1, 3, rows, cols); cells with ``center == INF``
    or degrees outside the table read as zero.
    """
    rows, cols, xt, yt = Cp.coeffs.shape
    W = 2 * radius + 1
    out = np.zeros((W, 3, rows, cols), dtype=np.int64)
    finite = center != INF
    safe_center = np.where(finite, center, 0)
    for w in range(W):
        y = safe_center + (w - radius)
        ok = finite & (y >= 0) & (y < yt)
        yy = np.clip(y, 0, yt - 1)
        vals = np.take_along_axis(Cp.coeffs, yy[:, :, None, None], axis=3)[..., 0]
        out[w, :xt] = np.where(ok[None], np.moveaxis(vals, -1, 0), 0)
    return out


def windowed_product(Ap: MonomialMatrix, Bp: MonomialMatrix, center: np.ndarray, radius: int) -> np.ndarray:
    """Naive product restricted to y-degrees within ``radius`` of ``center``.

    Same result as ``extract_window(poly_matmul(Ap, Bp, "naive"), center, radius)``
    without materialising the full y range.
    """
    if Ap.cols != Bp.rows:
        raise DimensionError(f"cannot multiply {Ap.shape} by {Bp.shape}")
    n1, m, n2 = Ap.rows, Ap.cols, Bp.cols
    W = 2 * radius + 1
    size = W * 3 * n1 * n2
    flat = np.zeros(size, dtype=np.int64)
    finite = center != INF
    safe_center = np.where(finite, center, 0)[:, None, :]
    cell = np.arange(n1)[:, None, None] * n2 + np.arange(n2)[None, None, :]
    for ks in _chunks(m, n1 * n2):
        w = Ap.y_deg[:, ks, None] + Bp.y_deg[None, ks, :] - safe_center + radius
        ok = (w >= 0) & (w < W) & Ap.present[:, ks, None] & Bp.present[None, ks, :] & finite[:, None, :]
        x = Ap.x_deg[:, ks, None] + Bp.x_deg[None, ks, :]
        idx = ((w * 3 + x) * (n1 * n2) + cell)[ok]
        flat += np.bincount(idx, minlength=size)
    return flat.reshape(W, 3, n1, n2)
