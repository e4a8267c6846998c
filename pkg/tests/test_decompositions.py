import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import densedmrg.decompositions as dec
from densedmrg.decompositions import NO_TRUNCATION, TruncationSpec, eigen, lq, polar, qr, svd, truncation_rank
from densedmrg.errors import DecompositionError, GroupingError, ShapeError
from densedmrg.tensor import DenseTensor, contract


def mat(rng, a, b, cplx=False):
    m = rng.standard_normal((a, b))
    if cplx:
        m = m + 1j * rng.standard_normal((a, b))
    return DenseTensor.from_array(m)


def recombine(res):
    return contract(contract(res.U, [res.U.rank - 1], res.D, [0]), [res.U.rank - 1], res.Vdag, [0])


class TestTruncationSpec:
    def test_defaults_inactive(self):
        assert not NO_TRUNCATION.active
        assert TruncationSpec(m=3).active and TruncationSpec(cutoff=1e-9).active

    @pytest.mark.parametrize("kwargs", [{"m": -1}, {"cutoff": -1.0}, {"mag": -2.0}])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            TruncationSpec(**kwargs)


class TestTruncationRank:
    def test_cutoff_suffix(self):
        w = np.array([0.6, 0.3, 0.08, 0.02])
        assert truncation_rank(w, TruncationSpec(cutoff=0.021), 1.0) == 3
        assert truncation_rank(w, TruncationSpec(cutoff=0.1), 1.0) == 2

    def test_m_clamp_and_floor(self):
        w = np.array([0.5, 0.3, 0.2])
        assert truncation_rank(w, TruncationSpec(m=2), 1.0) == 2
        assert truncation_rank(w, TruncationSpec(cutoff=10.0), 1.0) == 1

    def test_degenerate_group_kept_whole(self):
        w = np.array([0.4, 0.2, 0.2, 0.2])
        # cutoff would drop one of the degenerate trio; the group survives intact
        assert truncation_rank(w, TruncationSpec(cutoff=0.25), 1.0) == 4

    def test_degenerate_group_dropped_under_m(self):
        w = np.array([0.4, 0.2, 0.2, 0.2])
        assert truncation_rank(w, TruncationSpec(m=2), 1.0) == 1

    def test_zero_singular_values_dropped(self):
        w = np.array([1.0, 1e-30, 0.0])
        assert truncation_rank(w, TruncationSpec(m=10), 1.0) == 1
        assert truncation_rank(w, NO_TRUNCATION, 1.0) == 3


class TestSVD:
    def test_identity(self):
        res = svd(DenseTensor.identity(2))
        np.testing.assert_allclose(res.singular_values, [1, 1])
        assert res.truncerr == 0 and res.mag == pytest.approx(2.0)

    def test_against_gram_eigen(self, rng):
        m = mat(rng, 4, 6)
        s = svd(m).singular_values
        ev = np.sort(np.linalg.eigvalsh(m.to_array() @ m.to_array().T))[::-1]
        np.testing.assert_allclose(s, np.sqrt(ev), atol=1e-10)

    def test_rank3_grouping_shapes(self, rng):
        t = DenseTensor.from_array(rng.standard_normal((2, 3, 4)))
        res = svd(t, [[0, 1], [2]])
        assert res.U.dims == (2, 3, 4) and res.Vdag.dims == (4, 4)
        np.testing.assert_allclose(recombine(res).data, t.data, atol=1e-12)

    def test_mag_supplied_verbatim(self, rng):
        m = mat(rng, 3, 3)
        res = svd(m, None, TruncationSpec(m=1, mag=100.0))
        assert res.mag == 100.0
        s = svd(m).singular_values
        assert res.truncerr == pytest.approx((s[1:] ** 2).sum() / 100.0)

    def test_empty_group(self, rng):
        with pytest.raises(GroupingError):
            svd(DenseTensor.from_array(rng.standard_normal((2, 3, 4))), [[0, 1, 2], []])

    def test_fallback_chain(self, rng, monkeypatch):
        m = mat(rng, 5, 3, cplx=True)
        ref = svd(m).singular_values

        def broken(*args, **kwargs):
            raise np.linalg.LinAlgError("SVD did not converge")

        monkeypatch.setattr(np.linalg, "svd", broken)
        res = svd(m)
        np.testing.assert_allclose(res.singular_values, ref, atol=1e-10)
        np.testing.assert_allclose(recombine(res).data, m.data, atol=1e-10)
        monkeypatch.setattr(dec, "_svd_superpose", broken)
        res = svd(m)
        np.testing.assert_allclose(res.singular_values, ref, atol=1e-10)
        monkeypatch.setattr(dec, "_svd_gram", broken)
        with pytest.raises(DecompositionError):
            svd(m)

    def test_nonfinite(self):
        with pytest.raises(DecompositionError):
            svd(DenseTensor((2, 2), [1.0, np.nan, 0.0, 1.0]))

    @given(
        st.integers(0, 2**31),
        st.integers(1, 7),
        st.integers(1, 7),
        st.integers(0, 5),
        st.sampled_from([0.0, 1e-6, 1e-2, 0.2]),
        st.booleans(),
    )
    def test_invariants(self, seed, a, b, m, cutoff, cplx):
        rng = np.random.default_rng(seed)
        t = mat(rng, a, b, cplx)
        spec = TruncationSpec(m=m, cutoff=cutoff)
        res = svd(t, None, spec)
        U, V = res.U.to_array(), res.Vdag.to_array()
        k = U.shape[1]
        np.testing.assert_allclose(U.conj().T @ U, np.eye(k), atol=1e-12)
        np.testing.assert_allclose(V @ V.conj().T, np.eye(k), atol=1e-12)
        s = res.singular_values
        assert np.all(np.diff(s) <= 1e-15) and np.all(s >= 0)
        assert res.truncerr + (s**2).sum() / res.mag == pytest.approx(1.0, abs=1e-12)
        if m:
            assert k <= m
        elif cutoff:
            assert res.truncerr <= cutoff + 1e-15


class TestEigen:
    def test_diagonal(self):
        res = eigen(DenseTensor.from_array(np.diag([1.0, 3.0])))
        np.testing.assert_allclose(res.eigenvalues, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(res.U.to_array()), [[0, 1], [1, 0]])

    def test_singlet_reduced_density_matrix(self):
        psi = np.array([[0.0, 1.0], [-1.0, 0.0]]) / np.sqrt(2)
        rho = psi @ psi.T
        np.testing.assert_allclose(eigen(DenseTensor.from_array(rho)).eigenvalues, [0.5, 0.5])

    def test_hermitian_reconstruction(self, rng):
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = a + a.conj().T
        res = eigen(DenseTensor.from_array(h))
        U, D = res.U.to_array(), res.D.to_array()
        assert np.linalg.norm(U @ D @ U.conj().T - h) < 1e-10

    def test_characteristic_polynomial(self, rng):
        a = rng.standard_normal((4, 4))
        h = a + a.T
        roots = np.sort(np.roots(np.poly(h)).real)[::-1]
        np.testing.assert_allclose(eigen(DenseTensor.from_array(h)).eigenvalues, roots, atol=1e-8)

    def test_general_path_sorted_by_modulus(self, rng):
        m = np.array([[0.0, 2.0], [-3.0, 0.1]])
        vals = eigen(DenseTensor.from_array(m)).eigenvalues
        assert np.all(np.diff(np.abs(vals)) <= 1e-12)
        np.testing.assert_allclose(np.sort_complex(vals), np.sort_complex(np.linalg.eigvals(m)))

    def test_generalized(self, rng):
        a = rng.standard_normal((4, 4))
        h = a + a.T
        b = rng.standard_normal((4, 4))
        s = b @ b.T + 4 * np.eye(4)
        res = eigen(DenseTensor.from_array(h), overlap=DenseTensor.from_array(s))
        U, lam = res.U.to_array(), res.eigenvalues
        np.testing.assert_allclose(h @ U, s @ U * lam[None, :], atol=1e-10)

    def test_truncation_sums_raw_values(self):
        res = eigen(DenseTensor.from_array(np.diag([0.7, 0.2, 0.1])), None, TruncationSpec(cutoff=0.15))
        assert res.D.dims == (2, 2)
        assert res.truncerr == pytest.approx(0.1)

    def test_not_square(self, rng):
        with pytest.raises(ShapeError):
            eigen(mat(rng, 2, 3))

    @given(st.integers(0, 2**31), st.integers(1, 6), st.integers(1, 6))
    def test_svd_eigen_consistency(self, seed, a, b):
        rng = np.random.default_rng(seed)
        m = mat(rng, a, b, True).to_array()
        s = svd(DenseTensor.from_array(m)).singular_values
        ev = eigen(DenseTensor.from_array(m @ m.conj().T)).eigenvalues.real
        np.testing.assert_allclose(ev[: len(s)], s**2, atol=1e-10)


class TestQR:
    def test_identity(self):
        q, r, err, mag = qr(DenseTensor.identity(3))
        np.testing.assert_allclose(q.to_array(), np.eye(3))
        np.testing.assert_allclose(r.to_array(), np.eye(3))
        assert (err, mag) == (0.0, 1.0)

    def test_qr_tall(self, rng):
        m = mat(rng, 5, 3)
        q, r, _, _ = qr(m)
        Q = q.to_array()
        np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(Q @ r.to_array(), m.to_array(), atol=1e-12)
        assert np.all(np.diag(r.to_array()) >= 0)

    def test_lq_wide(self, rng):
        m = mat(rng, 3, 5, cplx=True)
        l, q, err, mag = lq(m)
        Q = q.to_array()
        np.testing.assert_allclose(Q @ Q.conj().T, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(l.to_array() @ Q, m.to_array(), atol=1e-12)
        assert (err, mag) == (0.0, 1.0)

    def test_inner_dim_is_min(self, rng):
        t = DenseTensor.from_array(rng.standard_normal((2, 2, 7)))
        q, r, _, _ = qr(t, [[0, 1], [2]])
        assert q.dims == (2, 2, 4) and r.dims == (4, 7)


class TestPolar:
    def test_identity(self):
        a, b = polar(DenseTensor.identity(3))
        np.testing.assert_allclose(a.to_array(), np.eye(3), atol=1e-14)
        np.testing.assert_allclose(b.to_array(), np.eye(3), atol=1e-14)

    @pytest.mark.parametrize("right", [True, False])
    def test_random(self, rng, right):
        m = mat(rng, 4, 4, cplx=True)
        a, b = polar(m, None, right)
        A, B = a.to_array(), b.to_array()
        np.testing.assert_allclose(A @ B, m.to_array(), atol=1e-10)
        iso = A if right else B
        np.testing.assert_allclose(iso.conj().T @ iso, np.eye(4), atol=1e-10)
        pos = B if right else A
        np.testing.assert_allclose(pos, pos.conj().T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(pos) > -1e-12)

    def test_rank3_shapes(self, rng):
        t = DenseTensor.from_array(rng.standard_normal((2, 3, 4)))
        a, b = polar(t, [[0, 1], [2]])
        assert a.dims == (2, 3, 4) and b.dims == (4, 4)
        np.testing.assert_allclose(contract(a, [2], b, [0]).data, t.data, atol=1e-12)
        a, b = polar(t, [[0, 1], [2]], right=False)
        assert a.dims == (2, 3, 6) and b.dims == (6, 4)
        np.testing.assert_allclose(contract(a, [2], b, [0]).data, t.data, atol=1e-12)
