import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from handsoff.backend import (LinearProgram, LMIBlock, SemidefiniteProgram,
                              SolveStatus, Status, eigenvalues,
                              min_singular_value, solve_lp, solve_sdp,
                              spectral_radius)


class TestSolveLP:
    def test_single_constraint_max(self):
        # maximize x s.t. x <= 1, as min -x
        p = LinearProgram(c=[-1.0], A_ub=[[1.0]], b_ub=[1.0])
        st_ = solve_lp(p)
        assert st_.status is Status.OPTIMAL
        assert st_.value == pytest.approx(-1.0, abs=1e-9)
        assert st_.x[0] == pytest.approx(1.0, abs=1e-9)

    def test_contradictory_box(self):
        p = LinearProgram(c=[-1.0], A_ub=[[1.0], [-1.0]], b_ub=[1.0, -2.0])
        assert solve_lp(p).status is Status.INFEASIBLE

    def test_box_support(self):
        # maximize (1,1) @ x over the unit box
        I = np.eye(2)
        p = LinearProgram(c=[-1.0, -1.0], A_ub=np.vstack([I, -I]),
                          b_ub=np.ones(4))
        st_ = solve_lp(p)
        assert st_.status is Status.OPTIMAL
        assert -st_.value == pytest.approx(2.0, abs=1e-9)
        np.testing.assert_allclose(st_.x, [1.0, 1.0], atol=1e-9)

    def test_unbounded(self):
        p = LinearProgram(c=[-1.0], A_ub=[[-1.0]], b_ub=[0.0])
        assert solve_lp(p).status is Status.UNBOUNDED

    def test_row_scaling_leaves_optimizer(self):
        rng = np.random.default_rng(3)
        I = np.eye(3)
        A = np.vstack([I, -I, rng.normal(size=(4, 3))])
        b = np.ones(10)
        c = rng.normal(size=3)
        base = solve_lp(LinearProgram(c=c, A_ub=A, b_ub=b))
        scale = rng.uniform(0.1, 10.0, size=10)
        scaled = solve_lp(LinearProgram(c=c, A_ub=A * scale[:, None],
                                        b_ub=b * scale))
        assert base.status is Status.OPTIMAL and scaled.status is Status.OPTIMAL
        np.testing.assert_allclose(base.x, scaled.x, atol=1e-7)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LinearProgram(c=[1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])

    def test_solution_present_iff_optimal(self):
        with pytest.raises(ValueError):
            SolveStatus(Status.INFEASIBLE, x=np.zeros(1))
        with pytest.raises(ValueError):
            SolveStatus(Status.OPTIMAL)


def _block(name, const, coeffs=None, margin=0.0):
    const = np.atleast_2d(np.asarray(const, float))
    return LMIBlock(name=name, size=const.shape[0], const=const,
                    coeffs=coeffs or {}, margin=margin)


class TestSolveSDP:
    def test_eigenvalue_bound(self):
        # minimize t s.t. t*I - diag(1, 2) >= 0
        blocks = [_block("b", np.diag([-1.0, -2.0]), {0: np.eye(2)})]
        p = SemidefiniteProgram(num_vars=1, objective=[1.0], blocks=blocks)
        st_ = solve_sdp(p)
        assert st_.status is Status.OPTIMAL
        assert st_.value == pytest.approx(2.0, abs=1e-6)

    def test_infeasible_equality(self):
        # X (2x2 sym, 3 vars) >= 0 with X = -I
        coeffs = {
            0: np.array([[1.0, 0.0], [0.0, 0.0]]),
            1: np.array([[0.0, 1.0], [1.0, 0.0]]),
            2: np.array([[0.0, 0.0], [0.0, 1.0]]),
        }
        blocks = [_block("X", np.zeros((2, 2)), coeffs)]
        A_eq = np.eye(3)
        b_eq = np.array([-1.0, 0.0, -1.0])
        p = SemidefiniteProgram(num_vars=3, objective=np.zeros(3),
                                blocks=blocks, A_eq=A_eq, b_eq=b_eq)
        assert solve_sdp(p).status is Status.INFEASIBLE

    def test_trace_lower_bound(self):
        # minimize tr(X) s.t. X >= I (2x2)
        coeffs = {
            0: np.array([[1.0, 0.0], [0.0, 0.0]]),
            1: np.array([[0.0, 1.0], [1.0, 0.0]]),
            2: np.array([[0.0, 0.0], [0.0, 1.0]]),
        }
        blocks = [_block("X", -np.eye(2), coeffs)]
        p = SemidefiniteProgram(num_vars=3, objective=[1.0, 0.0, 1.0],
                                blocks=blocks)
        st_ = solve_sdp(p)
        assert st_.status is Status.OPTIMAL
        assert st_.value == pytest.approx(2.0, abs=1e-6)

    def test_solution_recheck_reports_block_margins(self):
        blocks = [_block("b", np.diag([-1.0, -2.0]), {0: np.eye(2)})]
        p = SemidefiniteProgram(num_vars=1, objective=[1.0], blocks=blocks)
        st_ = solve_sdp(p)
        # slacks hold the minimum eigenvalue of every block at the solution
        recomputed = p.block_margins(st_.x)
        np.testing.assert_allclose(st_.slacks, recomputed, atol=1e-12)
        assert np.all(recomputed >= -1e-7)

    def test_asymmetric_coefficient_rejected(self):
        with pytest.raises(ValueError):
            _block("bad", np.zeros((2, 2)), {0: np.array([[0.0, 1.0],
                                                          [0.0, 0.0]])})


class TestSpectral:
    def test_diag(self):
        assert spectral_radius(np.diag([0.5, -0.3])) == pytest.approx(0.5)

    def test_double_integrator_not_schur(self):
        A = np.array([[1.0, 0.1], [0.0, 1.0]])
        assert spectral_radius(A) == pytest.approx(1.0, abs=1e-12)

    def test_closed_loop_is_schur(self, cruise):
        from handsoff.controller import assemble_closed_loop
        CL = assemble_closed_loop(cruise.model, cruise.controller)
        rho = spectral_radius(CL.A_CL)
        oracle = float(np.max(np.abs(np.linalg.eigvals(CL.A_CL))))
        assert rho == pytest.approx(oracle, abs=1e-12)
        assert rho < 1.0

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            eigenvalues(np.ones((2, 3)))
        with pytest.raises(ValueError):
            spectral_radius(np.ones((2, 3)))

    def test_min_singular_value(self):
        assert min_singular_value(np.diag([3.0, 0.5])) == pytest.approx(0.5)
        assert min_singular_value(np.ones((2, 3))) >= 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_similarity_invariance(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(3, 3))
        # well-conditioned transform: orthogonal times a mild diagonal
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        P = Q @ np.diag(rng.uniform(0.5, 2.0, size=3))
        sim = P @ M @ np.linalg.inv(P)
        assert spectral_radius(M) == pytest.approx(spectral_radius(sim),
                                                   abs=1e-8, rel=1e-8)
