import numpy as np
import pytest

from plabs.analysis import (certificates, likq_sufficient, operator_norm,
                            pf_equilibrate, piece_determinant, piece_inverse,
                            schur, sigma_coherence, sign_real_spectral_radius)
from plabs.core import AbsNormalForm, Signature, piece_jacobian
from plabs.errors import SingularPiece, SingularSmoothPart, TooLarge
from plabs.gallery import (cyclic, one_d_kink, reflector, rump, schueth,
                           tridiag_max)
from plabs.cpl import form_from_cpl

from conftest import random_forms

KINK_S = np.array([[1.0, -1.0], [1.0, -1.0]])


class TestSchur:
    def test_zero_z_passes_through(self):
        form = AbsNormalForm(c=[1.0, 2.0], b=[0.0, 0.0], Z=np.zeros((2, 2)),
                             L=[[0.0, 0.0], [0.5, 0.0]], J=np.eye(2),
                             Y=np.ones((2, 2)))
        sd = schur(form)
        assert np.array_equal(sd.S, form.L)
        assert np.array_equal(sd.c_hat, form.c)

    def test_tridiag_max_closed_form(self):
        form = tridiag_max(6)
        T = 2.0 * np.eye(6) - np.eye(6, k=1) - np.eye(6, k=-1)
        expected = -np.linalg.inv(np.eye(6) + 2.0 * T)
        assert np.allclose(schur(form).S, expected, atol=1e-12)

    def test_one_d_kink(self):
        sd = schur(one_d_kink(0.3))
        assert np.allclose(sd.S, KINK_S, atol=1e-14)

    def test_singular_smooth_part_raises(self):
        with pytest.raises(SingularSmoothPart):
            schur(schueth(0.0))  # J = 0

    def test_target_subsumed_into_rhs(self, rng):
        form = one_d_kink(1.0)
        y_target = np.array([0.7])
        sd = schur(form, y_target)
        plain = schur(form)
        shift = form.Z @ np.linalg.solve(form.J, y_target)
        assert np.allclose(sd.c_hat, plain.c_hat + shift, atol=1e-14)

    def test_recomputation_matches(self):
        for form in random_forms(10, seed=3):
            sd = schur(form)
            direct = form.L - form.Z @ np.linalg.solve(form.J, form.Y)
            assert np.allclose(sd.S, direct, atol=1e-10 * form.scale())
            assert np.isclose(sd.det_j, np.linalg.det(form.J), rtol=1e-9)


class TestPieceDeterminant:
    def test_no_switches(self):
        form = AbsNormalForm(c=[], b=[0.0, 0.0], Z=np.zeros((0, 2)),
                             L=np.zeros((0, 0)), J=[[2.0, 1.0], [0.0, 3.0]],
                             Y=np.zeros((2, 0)))
        sd = schur(form)
        assert np.isclose(piece_determinant(sd, Signature(np.zeros(0))), 6.0)

    def test_kink_mixed_signature(self):
        sd = schur(one_d_kink(1.0))
        assert np.isclose(piece_determinant(sd, Signature([1, -1])), -1.0)

    def test_matches_direct_determinant(self):
        # determinant identity versus the piece Jacobian formed explicitly
        rng = np.random.default_rng(12)
        for form in random_forms(50, seed=12):
            sigma = Signature(rng.choice([-1, 1], size=form.s))
            via_schur = piece_determinant(schur(form), sigma)
            direct = np.linalg.det(piece_jacobian(form, sigma).matrix)
            assert np.isclose(via_schur, direct, rtol=1e-8, atol=1e-10 * form.scale())


class TestPieceInverse:
    def test_no_switches_gives_j_inverse(self):
        form = AbsNormalForm(c=[], b=[0.0, 0.0], Z=np.zeros((0, 2)),
                             L=np.zeros((0, 0)), J=[[2.0, 1.0], [0.0, 3.0]],
                             Y=np.zeros((2, 0)))
        inv = piece_inverse(schur(form), form, Signature(np.zeros(0)))
        assert np.allclose(inv, np.linalg.inv(form.J), atol=1e-14)

    def test_product_identity(self):
        rng = np.random.default_rng(21)
        for form in random_forms(30, seed=21):
            sigma = Signature(rng.choice([-1, 1], size=form.s))
            sd = schur(form)
            try:
                inv = piece_inverse(sd, form, sigma)
            except SingularPiece:
                continue
            prod = inv @ piece_jacobian(form, sigma).matrix
            assert np.max(np.abs(prod - np.eye(form.n))) <= 1e-10 * form.scale()

    def test_singular_piece_detected(self):
        form = form_from_cpl(  # S = [[1]], sigma = (+) kills I - S Sigma
            __import__("plabs.cpl", fromlist=["CplSystem"]).CplSystem(S=[[1.0]], c_hat=[1.0]))
        sd = schur(form)
        with pytest.raises(SingularPiece):
            piece_inverse(sd, form, Signature([1]))


class TestOperatorNorm:
    def test_identity(self):
        for p in (1, 2, np.inf):
            assert operator_norm(np.eye(5), p) == pytest.approx(1.0, abs=1e-12)

    def test_reflector_two_norm(self):
        assert operator_norm(reflector().S, 2) == pytest.approx(0.3, abs=1e-10)

    def test_rump_inf_norm(self):
        for n in range(2, 9):
            assert operator_norm(rump(n).S, np.inf) == pytest.approx(0.9 * (n - 1))

    def test_against_numpy(self, rng):
        for _ in range(20):
            M = rng.standard_normal((int(rng.integers(1, 9)), int(rng.integers(1, 9))))
            assert operator_norm(M, 1) == pytest.approx(np.linalg.norm(M, 1), rel=1e-12)
            assert operator_norm(M, np.inf) == pytest.approx(np.linalg.norm(M, np.inf), rel=1e-12)
            assert operator_norm(M, 2) == pytest.approx(np.linalg.norm(M, 2), rel=1e-6)


class TestEquilibration:
    def test_rump3_is_already_balanced(self):
        eq = pf_equilibrate(rump(3).S)
        assert eq.rho_abs == pytest.approx(1.8, rel=1e-10)
        assert np.allclose(eq.d / eq.d[0], np.ones(3), atol=1e-10)
        assert np.allclose(eq.s_tilde, rump(3).S, atol=1e-10)
        assert not eq.approximate

    def test_cyclic_row_sums(self):
        eq = pf_equilibrate(cyclic(3, 0.65).S)
        assert eq.rho_abs == pytest.approx(0.65, rel=1e-10)
        assert np.allclose(eq.d / eq.d[0], np.ones(3), atol=1e-10)

    def test_strictly_triangular_norm_can_vanish(self):
        S = np.array([[0.0, 0.0], [0.7, 0.0]])
        eq = pf_equilibrate(S)
        assert eq.approximate
        assert operator_norm(eq.s_tilde, np.inf) < 1e-6

    def test_longer_chains_still_shrink(self):
        # the rank-one regularization drives the scaled norm toward
        # rho(|S|) = 0; depth-3 chains land at the cube root of epsilon
        S = np.array([[0.0, 0.0, 0.0], [0.7, 0.0, 0.0], [-0.4, 0.9, 0.0]])
        eq = pf_equilibrate(S)
        assert eq.approximate
        assert operator_norm(eq.s_tilde, np.inf) < 1e-3

    def test_irreducible_equilibration_identity(self, rng):
        for _ in range(20):
            s = int(rng.integers(2, 9))
            S = rng.standard_normal((s, s))
            S[np.abs(S) < 0.05] = 0.1  # keep the pattern fully dense
            eq = pf_equilibrate(S)
            assert not eq.approximate
            rho_ref = float(np.max(np.abs(np.linalg.eigvals(np.abs(S)))))
            assert eq.rho_abs == pytest.approx(rho_ref, rel=1e-8)
            assert operator_norm(eq.s_tilde, np.inf) == pytest.approx(eq.rho_abs, rel=1e-8)


class TestSignRealSpectralRadius:
    def test_rump2(self):
        assert sign_real_spectral_radius(rump(2).S) == pytest.approx(0.9, abs=1e-10)

    def test_strictly_triangular_vanishes(self):
        S = np.array([[0.0, 0.0], [3.0, 0.0]])
        assert sign_real_spectral_radius(S) == pytest.approx(0.0, abs=1e-12)

    def test_kink_matrix(self):
        assert sign_real_spectral_radius(KINK_S) == pytest.approx(2.0, abs=1e-10)

    def test_diagonal_similarity_invariance(self, rng):
        for _ in range(10):
            s = int(rng.integers(2, 7))
            S = rng.standard_normal((s, s))
            D = np.diag(rng.uniform(0.2, 5.0, size=s))
            a = sign_real_spectral_radius(S)
            b = sign_real_spectral_radius(np.linalg.inv(D) @ S @ D)
            assert a == pytest.approx(b, rel=1e-8, abs=1e-8)

    def test_bounding_chain(self, rng):
        for _ in range(20):
            s = int(rng.integers(1, 7))
            S = rng.standard_normal((s, s))
            r0 = sign_real_spectral_radius(S)
            rabs = float(np.max(np.abs(np.linalg.eigvals(np.abs(S)))))
            assert r0 <= rabs + 1e-9
            assert rabs <= operator_norm(S, np.inf) + 1e-9

    def test_too_large(self):
        with pytest.raises(TooLarge):
            sign_real_spectral_radius(np.eye(20), limit=16)


class TestSigmaCoherence:
    def test_zero_matrix(self):
        assert sigma_coherence(np.zeros((3, 3)))

    def test_rump5(self):
        assert sigma_coherence(rump(5).S)

    def test_kink_witness(self):
        check = sigma_coherence(KINK_S)
        assert not check
        assert check.witness is not None
        assert check.witness.sigma.tolist() == [1, -1]

    def test_rump_equivalence_with_radius(self, rng):
        # coherent exactly when the sign real spectral radius is below one
        tested = 0
        for _ in range(100):
            s = int(rng.integers(2, 9))
            S = rng.standard_normal((s, s)) * rng.uniform(0.2, 1.2)
            r0 = sign_real_spectral_radius(S)
            if abs(r0 - 1.0) <= 1e-6:
                continue
            tested += 1
            assert bool(sigma_coherence(S)) == (r0 < 1.0)
        assert tested >= 90

    def test_smooth_dominance_implies_coherence(self, rng):
        for _ in range(20):
            s = int(rng.integers(1, 7))
            S = rng.standard_normal((s, s))
            S *= rng.uniform(0.05, 0.95) / max(np.linalg.norm(S, 2), 1e-12)
            assert sigma_coherence(S)


class TestLikq:
    def test_vandermonde_rows(self):
        lam = np.array([0.5, 1.0, 1.5, 2.0, 2.5])
        Z = np.column_stack([lam, lam**2, lam**3])  # s=5, n=3
        assert likq_sufficient(np.ones(5), Z)

    def test_schueth_violates(self):
        form = schueth(0.0)
        assert not likq_sufficient(form.c, form.Z)

    def test_single_constant_row(self):
        assert likq_sufficient([1.0], np.zeros((1, 4)))

    def test_wide_full_rank(self):
        # s < n+1: full row rank is the operative requirement
        assert likq_sufficient([0.0, 1.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert not likq_sufficient([0.0, 0.0], [[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])

    def test_combinatorial_guard(self):
        with pytest.raises(TooLarge):
            likq_sufficient(np.ones(40), np.random.default_rng(0).standard_normal((40, 19)),
                            limit_count=10**6)


class TestCertificates:
    def test_reflector_verdicts(self):
        form = form_from_cpl(reflector())
        cert = certificates(form)
        assert cert.verdicts["newton_cpl"]          # ||S||_2 = 0.3 < 1/3
        assert not cert.verdicts["signed_ge"]       # rho(|S|) = 1.6/3 > 1/2
        assert cert.norms_s[2] == pytest.approx(0.3, abs=1e-9)
        assert cert.rho_abs == pytest.approx(1.6 / 3.0, abs=1e-9)

    def test_cyclic_verdicts(self):
        cert = certificates(form_from_cpl(cyclic(3, 0.65)))
        assert cert.verdicts["modulus"]
        assert cert.verdicts["block_seidel"]
        assert not cert.verdicts["newton_cpl"]
        assert not cert.verdicts["signed_ge"]

    def test_tridiag_modulus_verdict(self):
        cert = certificates(tridiag_max(8))
        assert cert.verdicts["modulus"]
        assert cert.norms_s[2] < 1.0

    def test_verdicts_recomputable_from_scalars(self):
        for form in random_forms(10, seed=41):
            cert = certificates(form)
            if not cert.schur_available:
                continue
            assert cert.verdicts["modulus"] == (
                min(min(cert.norms_s.values()), cert.equilibrated_inf_norm) < 1.0)
            assert cert.verdicts["block_seidel"] == (cert.seidel < 1.0)
            assert cert.verdicts["newton_cpl"] == (min(cert.norms_s.values()) < 1.0 / 3.0)
            assert cert.verdicts["newton_opl"] == (cert.rho_bar < 1.0)
            assert cert.verdicts["signed_ge"] == (cert.rho_abs < 0.5)

    def test_singular_smooth_part_flagged(self):
        cert = certificates(schueth(0.0))
        assert not cert.schur_available
        assert cert.norms_l  # the L-based entries are still present
        assert any("SchurUnavailable" in m for m in cert.messages)

    def test_large_s_skips_enumeration(self):
        form = form_from_cpl(rump(18))
        cert = certificates(form, limit=16)
        assert cert.sign_real_radius is None
        assert cert.sigma_coherent is None
        assert len(cert.skipped) == 2
