import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from densedmrg.decompositions import TruncationSpec
from densedmrg.ed import full_h, full_psi
from densedmrg.errors import NormalizationError, ShapeError, SiteRangeError
from densedmrg.measure import entanglement_profile, expect
from densedmrg.models import fermion_ops, heisenberg2d_mpo, heisenberg_mpo, hubbard_mpo, tfim_mpo
from densedmrg.network import (
    MPO,
    MPS,
    apply_local_ops,
    apply_mpo,
    boundary_env,
    canonicalize,
    ferro_state,
    make_env,
    make_mpo,
    move_oc,
    mpo_layer,
    mps_product_state,
    rand_mps,
    staggered_state,
    update_left,
    update_right,
)
from densedmrg.tensor import DenseTensor, contract, norm

from oracles import heisenberg_dense


def assert_gauge(psi, tol=1e-10):
    for i in range(psi.N):
        a = psi[i]
        if i < psi.oc:
            g = contract(a, [0, 1], a, [0, 1], conj_a=True).to_array()
        elif i > psi.oc:
            g = contract(a, [1, 2], a, [1, 2], conj_b=True).to_array()
        else:
            continue
        np.testing.assert_allclose(g, np.eye(g.shape[0]), atol=tol)


class TestProductStates:
    def test_all_up(self):
        v = full_psi(ferro_state(2, 4))
        assert v[0] == 1.0 and np.count_nonzero(v) == 1

    def test_up_down(self):
        v = full_psi(staggered_state(2, 2))
        # |up dn>: site 0 in state 0, site 1 in state 1 -> flat index 0 + 2*1
        assert v[2] == 1.0 and np.count_nonzero(v) == 1

    def test_long_chain_unentangled(self):
        psi = ferro_state(2, 100)
        assert norm(psi[psi.oc]) == 1.0
        assert np.all(entanglement_profile(psi) == 0)

    def test_non_normalized(self):
        with pytest.raises(NormalizationError):
            mps_product_state(2, [np.array([1.0, 1.0])] * 3)

    def test_wrong_local_dim(self):
        with pytest.raises(ShapeError):
            mps_product_state(2, [np.array([1.0, 0.0, 0.0])])

    def test_physical_dims_cycle(self):
        psi = mps_product_state([2, 3], [np.eye(2)[0], np.eye(3)[1], np.eye(2)[1]])
        assert psi.physical_dims == [2, 3, 2]


class TestRandMPS:
    def test_m1_is_product(self):
        psi = rand_mps(2, 6, 1, seed=0)
        assert psi.bond_dims == [1] * 5

    def test_bond_caps(self):
        psi = rand_mps(2, 10, 50, seed=0)
        assert psi.bond_dims == [min(50, 2 ** (k + 1), 2 ** (10 - k - 1)) for k in range(9)]

    def test_seeded(self):
        a, b = rand_mps(3, 5, 4, seed=7), rand_mps(3, 5, 4, seed=7)
        for i in range(5):
            np.testing.assert_array_equal(a[i].data, b[i].data)

    def test_gauge_and_norm(self):
        psi = rand_mps(2, 7, 6, oc=3, seed=1)
        assert_gauge(psi)
        assert norm(psi[3]) == pytest.approx(1.0, abs=1e-12)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            rand_mps(2, 4, 0, seed=0)


class TestGauge:
    def test_move_to_self(self):
        psi = rand_mps(2, 5, 4, oc=2, seed=3)
        before = [psi[i] for i in range(5)]
        move_oc(psi, 2)
        assert all(psi[i] is before[i] for i in range(5))

    def test_round_trip_preserves_state(self):
        psi = rand_mps(2, 6, 8, oc=0, seed=4)
        ref = full_psi(psi)
        move_oc(psi, 5)
        assert psi.oc == 5
        assert_gauge(psi)
        np.testing.assert_allclose(full_psi(psi), ref, atol=1e-12)
        move_oc(psi, 0)
        np.testing.assert_allclose(full_psi(psi), ref, atol=1e-12)

    def test_out_of_range(self):
        psi = rand_mps(2, 4, 2, seed=0)
        with pytest.raises(SiteRangeError):
            move_oc(psi, 4)
        with pytest.raises(SiteRangeError):
            psi.oc = -1

    @given(st.integers(0, 2**31), st.integers(2, 6), st.integers(0, 5))
    def test_norm_at_center(self, seed, n, oc):
        oc = min(oc, n - 1)
        rng = np.random.default_rng(seed)
        tensors, links = [], [1] + list(rng.integers(1, 4, n - 1)) + [1]
        for i in range(n):
            tensors.append(DenseTensor.from_array(rng.standard_normal((links[i], 2, links[i + 1]))))
        psi = MPS(tensors, 0)
        raw = full_psi(psi)
        if np.linalg.norm(raw) < 1e-8:
            return
        canonicalize(psi, oc, normalize=False)
        assert_gauge(psi)
        assert norm(psi[oc]) ** 2 == pytest.approx(np.vdot(raw, raw).real, rel=1e-10)

    def test_canonicalize_zero_state(self):
        psi = MPS([DenseTensor.zeros((1, 2, 1)), DenseTensor.zeros((1, 2, 1))], 0)
        with pytest.raises(NormalizationError):
            canonicalize(psi)


class TestMakeMPO:
    def test_hubbard_bulk_dims(self):
        mpo = hubbard_mpo(1.0, 4.0, -2.0, 5)
        assert mpo[2].dims == (6, 4, 4, 6)
        assert mpo[0].dims == (1, 4, 4, 6) and mpo[4].dims == (6, 4, 4, 1)

    def test_2d_bulk_link(self):
        mpo = heisenberg2d_mpo(1.0, 4, 4)
        assert max(mpo.link_dims) == 14

    def test_two_site_heisenberg_spectrum(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(full_h(heisenberg_mpo(1.0, 2))), [-0.75, 0.25, 0.25, 0.25], atol=1e-14)

    def test_matches_kron(self):
        for n in range(2, 8):
            np.testing.assert_allclose(full_h(heisenberg_mpo(1.0, n)), heisenberg_dense(n), atol=1e-12)

    def test_inconsistent_block(self):
        eye = np.eye(2)
        with pytest.raises(ShapeError):
            make_mpo([[eye, None], [eye]], 2, 3)
        with pytest.raises(ShapeError):
            make_mpo([[eye, None], [np.eye(3), eye]], 2, 3)

    def test_validate_catches_links(self):
        w = DenseTensor.ones((1, 2, 2, 2))
        with pytest.raises(ShapeError):
            MPO([w, DenseTensor.ones((3, 2, 2, 1))]).validate()


class TestApplyMPO:
    def test_identity_mpo(self):
        psi = rand_mps(2, 5, 4, seed=2)
        ident = make_mpo([[np.eye(2)]], 2, 5)
        out = apply_mpo(psi, ident)
        assert expect(out, bra=psi) == pytest.approx(1.0, abs=1e-12)

    def test_overlap_is_energy(self):
        psi = rand_mps(2, 4, 4, seed=5)
        h = heisenberg_mpo(1.0, 4)
        assert expect(apply_mpo(psi, h), bra=psi) == pytest.approx(expect(psi, h), abs=1e-10)

    def test_norm_is_h_squared(self):
        psi = rand_mps(2, 6, 4, oc=2, seed=6)
        h = heisenberg_mpo(1.0, 6)
        hpsi = apply_mpo(psi, h)
        assert hpsi.oc == 2
        assert norm(hpsi[hpsi.oc]) ** 2 == pytest.approx(expect(psi, h, h), abs=1e-10)

    def test_truncated(self):
        psi = rand_mps(2, 8, 8, seed=7)
        h = heisenberg_mpo(1.0, 8)
        out = apply_mpo(psi, h, TruncationSpec(m=6))
        assert max(out.bond_dims) <= 6

    def test_mismatch(self):
        with pytest.raises(ShapeError):
            apply_mpo(rand_mps(2, 4, 2, seed=0), heisenberg_mpo(1.0, 5))


class TestEnvironments:
    def test_boundary(self):
        b = boundary_env(1)
        assert b.dims == (1, 1, 1) and b.data[0] == 1.0

    def test_product_state_n2(self):
        psi = staggered_state(2, 2)
        h = heisenberg_mpo(1.0, 2)
        L, R = make_env(psi, h)
        left = update_left(L[0], psi[0], [h[0]])
        val = contract(update_left(left, psi[1], [h[1]]), [0, 1, 2], R[1], [2, 1, 0])
        assert val == pytest.approx(expect(psi, h)) == pytest.approx(-0.25)

    def test_two_mpo_rank(self):
        psi = rand_mps(2, 5, 3, oc=2, seed=1)
        h = heisenberg_mpo(1.0, 5)
        L, R = make_env(psi, h, h)
        assert L[2].rank == 4 and R[2].rank == 4
        assert L[3] is None and R[1] is None

    def test_left_right_agree(self):
        psi = rand_mps(2, 6, 4, oc=0, seed=2)
        h = tfim_mpo(0.7, 6)
        L = boundary_env(1)
        R = boundary_env(1)
        for i in range(6):
            L = update_left(L, psi[i], [h[i]])
        for i in range(5, -1, -1):
            R = update_right(R, psi[i], [h[i]])
        assert L.item() == pytest.approx(R.item(), abs=1e-12)

    def test_mpo_layer_matches_einsum(self, rng):
        t = DenseTensor.from_array(rng.standard_normal((3, 4, 2, 5)))
        w = DenseTensor.from_array(rng.standard_normal((4, 2, 2, 6)))
        out = mpo_layer(t, 1, w, "left").to_array()
        ref = np.einsum("abst,bpsc->apct", t.to_array(), w.to_array())
        np.testing.assert_allclose(out, ref, atol=1e-12)
        t = DenseTensor.from_array(rng.standard_normal((3, 2, 6, 5)))
        out = mpo_layer(t, 1, w, "right").to_array()
        ref = np.einsum("ascx,bpsc->abpx", t.to_array(), w.to_array())
        np.testing.assert_allclose(out, ref, atol=1e-12)
        with pytest.raises(ShapeError):
            mpo_layer(t, 0, w, "left")


class TestLocalOps:
    def test_two_fermions_on_vacuum(self):
        f = fermion_ops()
        psi = ferro_state(4, 4)
        apply_local_ops(psi, [1, 3], f.Cupdag, f.F)
        v = full_psi(psi)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        n_up = [expect_site(psi, f.Nup, i) for i in range(4)]
        np.testing.assert_allclose(n_up, [0, 1, 0, 1], atol=1e-12)

    def test_identity_trail_is_plain(self):
        s = np.array([[0.0, 1.0], [1.0, 0.0]])
        a = ferro_state(2, 3)
        b = ferro_state(2, 3)
        apply_local_ops(a, [2], s, np.eye(2))
        apply_local_ops(b, [2], s)
        np.testing.assert_allclose(full_psi(a), full_psi(b))

    def test_pauli_exclusion(self):
        f = fermion_ops()
        with pytest.raises(NormalizationError):
            apply_local_ops(ferro_state(4, 3), [1, 1], f.Cupdag, f.F)

    def test_anticommutation_sign(self):
        f = fermion_ops()
        a = apply_local_ops(ferro_state(4, 3), [0], f.Cupdag, f.F)
        a = apply_local_ops(a, [2], f.Cupdag, f.F)
        b = apply_local_ops(ferro_state(4, 3), [2], f.Cupdag, f.F)
        b = apply_local_ops(b, [0], f.Cupdag, f.F)
        np.testing.assert_allclose(full_psi(a), -full_psi(b), atol=1e-14)

    def test_site_range(self):
        with pytest.raises(SiteRangeError):
            apply_local_ops(ferro_state(2, 3), [3], np.eye(2))


def expect_site(psi, op, site):
    from densedmrg.measure import expect_local

    return expect_local(psi, op)[site]
