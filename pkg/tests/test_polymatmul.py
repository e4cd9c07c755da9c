from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import convolution_oracle, random_polymatrix_pair
from monoplus.matrices import INF, DimensionError
from monoplus.polymatmul import (
    BACKENDS,
    MonomialMatrix,
    PackingOverflowError,
    PolyMatrix,
    build_Ap,
    build_Bp,
    coefficient_bound,
    extract_window,
    ntt,
    poly_matmul,
    windowed_product,
)
from monoplus.primes import primitive_root


def _pack_stride(Ap, Bp):
    return max(1, coefficient_bound(Ap, Bp).bit_length())


def _oracle(Ap, Bp):
    ref = convolution_oracle(Ap.to_poly().coeffs, Bp.to_poly().coeffs)
    # pad to the declared output shape (3 x-terms, summed y bounds)
    out = np.zeros((ref.shape[0], ref.shape[1], 3, Ap.y_degree_bound + Bp.y_degree_bound + 1), dtype=np.int64)
    out[:, :, :ref.shape[2], :ref.shape[3]] = ref
    return out


class TestBuild:
    def test_monomials(self):
        Ap = build_Ap(np.array([[5, 4, INF]]), np.array([[2, 2, INF]]))
        assert Ap.x_deg.tolist() == [[1, 0, 0]]
        assert Ap.y_deg[0, :2].tolist() == [2, 2]
        assert Ap.present.tolist() == [[True, True, False]]
        assert not Ap.to_poly().coeffs[0, 2].any()

    def test_bad_difference(self):
        with pytest.raises(ValueError, match="expected 0 or 1"):
            build_Ap(np.array([[6]]), np.array([[2]]))

    def test_b_must_be_finite(self):
        with pytest.raises(ValueError):
            build_Bp(np.array([[INF]]), np.array([[INF]]))
        Bp = build_Bp(np.array([[3]]), np.array([[1]]))
        assert (Bp.x_deg[0, 0], Bp.y_deg[0, 0]) == (1, 1)


class TestProduct:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_zero(self, backend):
        Ap = PolyMatrix.zeros(2, 3, 2, 4)
        Bp = PolyMatrix.zeros(3, 2, 2, 4)
        assert not poly_matmul(Ap, Bp, backend, stride=2).coeffs.any()

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_single_monomial(self, backend):
        Ap = MonomialMatrix(np.array([[1]]), np.array([[2]]), np.array([[True]]), 2)
        Bp = MonomialMatrix(np.array([[0]]), np.array([[3]]), np.array([[True]]), 3)
        C = poly_matmul(Ap, Bp, backend).coeffs[0, 0]
        assert C[1, 5] == 1 and C.sum() == 1

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_against_oracle(self, backend):
        rng = np.random.default_rng(11)
        for _ in range(15):
            Ap, Bp = random_polymatrix_pair(rng, max_dim=6, max_degree=12)
            got = poly_matmul(Ap, Bp, backend, stride=_pack_stride(Ap, Bp)).coeffs
            assert np.array_equal(got, _oracle(Ap, Bp))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            poly_matmul(PolyMatrix.zeros(2, 3, 2, 1), PolyMatrix.zeros(2, 3, 2, 1))

    def test_input_x_degree_checked(self):
        with pytest.raises(ValueError):
            poly_matmul(PolyMatrix.zeros(1, 1, 3, 1), PolyMatrix.zeros(1, 1, 2, 1))

    def test_packing_overflow(self):
        table = np.full((1, 4, 2, 2), 3, dtype=np.int64)
        Ap, Bp = PolyMatrix(table), PolyMatrix(table.transpose(1, 0, 2, 3).copy())
        with pytest.raises(PackingOverflowError, match="naive"):
            poly_matmul(Ap, Bp, "split3-pack", stride=3)
        ok = poly_matmul(Ap, Bp, "split3-pack", stride=_pack_stride(Ap, Bp))
        assert np.array_equal(ok.coeffs, poly_matmul(Ap, Bp, "naive").coeffs)

    @given(st.integers(0, 2**32 - 1))
    def test_conservation_and_degrees(self, seed):
        rng = np.random.default_rng(seed)
        Ap, Bp = random_polymatrix_pair(rng, max_dim=8, max_degree=20, monomial=True)
        C = poly_matmul(Ap, Bp, "naive").coeffs
        # every present A entry meets every B entry in its row (all B entries present or not)
        expected = int((Ap.present.sum(axis=0) * Bp.present.sum(axis=1)).sum())
        assert C.sum() == expected
        assert C.shape[2] == 3
        assert C.shape[3] - 1 == Ap.y_degree_bound + Bp.y_degree_bound

    @given(st.integers(0, 2**32 - 1), st.integers(0, 4))
    def test_window_matches_full_product(self, seed, radius):
        rng = np.random.default_rng(seed)
        Ap, Bp = random_polymatrix_pair(rng, max_dim=6, max_degree=10, monomial=True)
        center = rng.integers(-3, Ap.y_degree_bound + Bp.y_degree_bound + 4, (Ap.rows, Bp.cols))
        center[rng.random(center.shape) < 0.1] = INF
        full = extract_window(poly_matmul(Ap, Bp, "naive"), center, radius)
        assert np.array_equal(windowed_product(Ap, Bp, center, radius), full)


def test_ntt_round_trip():
    q = 998244353
    n = 16
    root = pow(primitive_root(q), (q - 1) // n, q)
    rng = np.random.default_rng(0)
    a = rng.integers(0, 1000, n)
    b = ntt(ntt(a, q, root), q, root, inverse=True)
    assert b.tolist() == a.tolist()
