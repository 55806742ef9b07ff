import numpy as np
import pytest

from plabs.analysis import sign_real_spectral_radius
from plabs.cpl import CplSystem, brute_force_solutions
from plabs.errors import TooLarge
from plabs.gallery import cyclic
from plabs.lcp import lcp_solve_enum, p_matrix_check, to_lcp

KINK_S = np.array([[1.0, -1.0], [1.0, -1.0]])


def solution_sets_match(a, b, tol):
    if len(a) != len(b):
        return False
    used = set()
    for z in a:
        hit = next((j for j, w in enumerate(b)
                    if j not in used and np.max(np.abs(z - w)) <= tol), None)
        if hit is None:
            return False
        used.add(hit)
    return True


class TestToLcp:
    def test_zero_s(self, rng):
        c_hat = rng.standard_normal(3)
        data = to_lcp(CplSystem(S=np.zeros((3, 3)), c_hat=c_hat))
        assert np.allclose(data.q, c_hat, atol=1e-14)
        assert np.allclose(data.M, np.eye(3), atol=1e-14)
        assert not data.role_swapped

    def test_defining_identities(self, rng):
        for _ in range(10):
            s = int(rng.integers(1, 7))
            S = rng.standard_normal((s, s))
            if np.linalg.cond(np.eye(s) - S) > 1e12:
                continue
            sys = CplSystem(S=S, c_hat=rng.standard_normal(s))
            data = to_lcp(sys)
            K = np.eye(s) - S
            scale = max(1.0, np.max(np.abs(S)), np.max(np.abs(sys.c_hat)))
            assert np.max(np.abs(K @ data.q - sys.c_hat)) <= 1e-10 * scale
            assert np.max(np.abs(K @ data.M - (np.eye(s) + S))) <= 1e-10 * scale

    def test_role_swap_fallback(self):
        sys = CplSystem(S=np.eye(2), c_hat=[0.0, 0.0])  # I - S singular
        data = to_lcp(sys)
        assert data.role_swapped
        # swapped convention: M is the inverse of the usual definition
        assert np.allclose(data.M, np.zeros((2, 2)), atol=1e-14)

    def test_cyclic_m_is_p_matrix(self):
        data = to_lcp(cyclic(3, 0.65))
        assert p_matrix_check(data.M)

    def test_kink_m_fails_p_check(self):
        data = to_lcp(CplSystem(S=KINK_S, c_hat=[0.0, 0.0]))
        assert not p_matrix_check(data.M)


class TestPMatrixCheck:
    def test_identity(self):
        assert p_matrix_check(np.eye(4))

    def test_rotation_fails(self):
        assert not p_matrix_check(np.array([[0.0, 1.0], [-1.0, 0.0]]))

    def test_equivalence_with_sign_real_radius(self, rng):
        tested = 0
        for _ in range(60):
            s = int(rng.integers(2, 7))
            S = rng.standard_normal((s, s)) * rng.uniform(0.2, 1.2)
            r0 = sign_real_spectral_radius(S)
            if abs(r0 - 1.0) <= 1e-6 or np.linalg.cond(np.eye(s) - S) > 1e10:
                continue
            tested += 1
            data = to_lcp(CplSystem(S=S, c_hat=np.zeros(s)))
            assert p_matrix_check(data.M) == (r0 < 1.0)
        assert tested >= 40

    def test_too_large(self):
        with pytest.raises(TooLarge):
            p_matrix_check(np.eye(15), limit=14)


class TestEnumerativeSolver:
    def test_nonnegative_q_gives_trivial_solution(self, rng):
        s = 4
        M = np.eye(s) + 0.1 * rng.standard_normal((s, s))
        q = rng.uniform(0.5, 2.0, size=s)
        S = np.zeros((s, s))
        data = to_lcp(CplSystem(S=S, c_hat=q))  # S = 0 -> q = c_hat, M = I
        enum = lcp_solve_enum(data)
        assert len(enum) == 1
        u, w, z = enum.triples[0]
        assert np.allclose(w, 0.0, atol=1e-12)
        assert np.allclose(u, q, atol=1e-12)
        assert np.allclose(z, q, atol=1e-12)

    def test_cyclic_cross_oracle(self):
        sys = cyclic(3, 0.65)
        enum = lcp_solve_enum(to_lcp(sys))
        oracle = brute_force_solutions(sys)
        assert solution_sets_match(enum.solutions(), oracle, 1e-9)
        assert np.allclose(enum.solutions()[0], np.full(3, 1.0 / 0.35), atol=1e-9)

    def test_kink_multiple_solutions_agree(self):
        # this right-hand side realizes three distinct solutions
        sys = CplSystem(S=KINK_S, c_hat=[1.0, -1.0])
        oracle = brute_force_solutions(sys)
        assert len(oracle) == 3
        enum = lcp_solve_enum(to_lcp(sys))
        assert solution_sets_match(enum.solutions(), oracle, 1e-9)

    def test_complementarity_of_triples(self, rng):
        for _ in range(10):
            s = int(rng.integers(2, 6))
            S = rng.standard_normal((s, s)) * 0.4
            sys = CplSystem(S=S, c_hat=rng.standard_normal(s))
            for u, w, z in lcp_solve_enum(to_lcp(sys)):
                assert np.max(np.abs(u + w - np.abs(z))) <= 1e-9
                assert np.max(np.abs(u * w)) <= 1e-9

    def test_p_matrix_iff_unique_for_many_q(self, rng):
        from plabs.cpl import h_eval

        p_cases = non_p_cases = 0
        for k in range(12):
            s = int(rng.integers(2, 5))
            S = rng.standard_normal((s, s)) * rng.uniform(0.2, 1.1)
            r0 = sign_real_spectral_radius(S)
            if abs(r0 - 1.0) <= 1e-3 or np.linalg.cond(np.eye(s) - S) > 1e10:
                continue
            base = CplSystem(S=S, c_hat=np.zeros(s))
            is_p = p_matrix_check(to_lcp(base).M)
            if is_p:
                p_cases += 1
                for _ in range(50):
                    q = rng.standard_normal(s)
                    sys_q = CplSystem(S=S, c_hat=(np.eye(s) - S) @ q)
                    assert len(lcp_solve_enum(to_lcp(sys_q))) == 1
            else:
                non_p_cases += 1
                # sample right-hand sides as images of H: whenever two sheets
                # of a non-injective H overlap, such a c_hat has >1 solution
                counts = []
                for _ in range(50):
                    c_hat = h_eval(base, 2.0 * rng.standard_normal(s))
                    counts.append(len(lcp_solve_enum(to_lcp(CplSystem(S=S, c_hat=c_hat)))))
                assert any(c != 1 for c in counts)
        assert p_cases >= 2 and non_p_cases >= 2

    def test_random_cross_oracle(self, rng):
        for _ in range(20):
            s = int(rng.integers(2, 7))
            S = rng.standard_normal((s, s)) * rng.uniform(0.2, 1.0)
            if np.linalg.cond(np.eye(s) - S) > 1e10:
                continue
            sys = CplSystem(S=S, c_hat=rng.standard_normal(s))
            enum = lcp_solve_enum(to_lcp(sys))
            oracle = brute_force_solutions(sys)
            assert solution_sets_match(enum.solutions(), oracle, 1e-8 * sys.scale())

    def test_limit_guard(self):
        data = to_lcp(CplSystem(S=np.zeros((17, 17)), c_hat=np.zeros(17)))
        with pytest.raises(TooLarge):
            lcp_solve_enum(data)
