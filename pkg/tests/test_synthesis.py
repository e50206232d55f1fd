from collections import Counter

import numpy as np
import pytest

from handsoff.backend import Status, solve_sdp
from handsoff.conditions import verify_all
from handsoff.model import PlantModel, derive_sets
from handsoff.polytope import HPolytope
from handsoff.synthesis import (FrozenPoints, InitializationFailedError,
                                SynthesisParams, build_problem, extract,
                                initialize, iterate, problem_data)


@pytest.fixture(scope="module")
def cruise_data(cruise):
    return problem_data(cruise.model, cruise.derived, 2)


def block_census(sdp):
    return Counter(b.name.split("[")[0] for b in sdp.blocks)


class TestBuildProblem:
    def test_constraint_census_matches_closed_forms(self, cruise, cruise_data):
        """Block counts against the closed-form constraint inventory."""
        data = cruise_data
        p, nS, nX, nU = data.p, 4, 4, 2
        nc = len(data.omega)
        params = SynthesisParams(n_K=2, eta=0.99, eps_s=0.6)
        frozen = FrozenPoints.scaled_identity(p, nU, 1.0)
        h = build_problem(data, params, frozen, lock=None, prev=None,
                          eps_p=0.01, eps_m=0.01)
        census = block_census(h.sdp)
        # invariance cores: one per facet index and set pair
        assert census["opt_f_I"] == p and census["opt_f_O"] == p
        # slack-variable linearizations
        assert census["opt_g"] == p and census["opt_h"] == p
        assert census["opt_i"] == p and census["opt_k"] == p
        # projection constraints per facet of S and X
        assert census["opt_m"] == nS and census["opt_n"] == nX
        # input constraints per facet of U
        assert census["opt_o"] == nU and census["opt_p"] == nU
        # outer set covers every vertex of S_c (two one-sided bounds each)
        assert census["opt_q_hi"] == nc and census["opt_q_lo"] == nc
        # multiplier sign constraints
        assert census["opt_b_DI1"] == census["opt_b_DI2"] == p
        assert census["opt_b_DO1"] == census["opt_b_DO2"] == p
        assert census["opt_c_DS"] == nS and census["opt_d_DX"] == nX
        assert census["opt_e_DU1"] == census["opt_e_DU2"] == nU
        assert census["cost_epigraph"] == 1
        # no freeze equalities in the very first problem
        assert h.sdp.A_eq is None

    def test_lock_parity_pins_complementary_pairs(self, cruise, cruise_data):
        data = cruise_data
        params = SynthesisParams(n_K=2, eta=0.99, eps_s=0.6)
        frozen = FrozenPoints.scaled_identity(data.p, 2, 1.0)
        rng = np.random.default_rng(0)
        prev = {name: rng.normal(size=(4, 4))
                for name in ("HtI", "HtIi", "HO", "HOi")}
        odd = build_problem(data, params, frozen, lock="HI_HO", prev=prev,
                            eps_p=0.01, eps_m=0.01)
        even = build_problem(data, params, frozen, lock="HIi_HOi", prev=prev,
                             eps_p=0.01, eps_m=0.01)
        # each lock pins exactly the 2 p x p factor matrices, entrywise
        assert odd.sdp.A_eq.shape[0] == 2 * 16
        assert even.sdp.A_eq.shape[0] == 2 * 16
        for handle, names in ((odd, ("HtI", "HO")), (even, ("HtIi", "HOi"))):
            pinned = set()
            for row, rhs in zip(handle.sdp.A_eq, handle.sdp.b_eq):
                idx = np.nonzero(row)[0]
                assert idx.size == 1 and row[idx[0]] == 1.0
                pinned.add(int(idx[0]))
            expected = set()
            for name in names:
                expected |= set(handle.registry.variable_indices(name))
                vals = prev[name].reshape(-1)
                got = [rhs for row, rhs in zip(handle.sdp.A_eq,
                                               handle.sdp.b_eq)
                       if np.nonzero(row)[0][0]
                       in handle.registry.variable_indices(name)]
                np.testing.assert_allclose(got, vals)
            assert pinned == expected

    def test_nk_zero_collapses_cleanly(self, cruise):
        data = problem_data(cruise.model, cruise.derived, 0)
        assert data.p == 2
        params = SynthesisParams(n_K=0, eta=0.9, eps_s=0.5)
        frozen = FrozenPoints.scaled_identity(2, 2, 1.0)
        h = build_problem(data, params, frozen, lock=None, prev=None,
                          eps_p=0.01, eps_m=0.01)
        sizes = {b.name.split("[")[0]: b.size for b in h.sdp.blocks}
        assert sizes["opt_f_I"] == 2 * 2 + 2 * 2  # p + 2n + p with p = n
        assert sizes["opt_g"] == 4  # 2p
        assert sizes["opt_i"] == 3  # p + 1

    def test_wrong_frozen_count_rejected(self, cruise, cruise_data):
        params = SynthesisParams(n_K=2, eta=0.99, eps_s=0.6)
        frozen = FrozenPoints.scaled_identity(4, 5, 1.0)  # nU is 2, not 5
        with pytest.raises(ValueError, match="frozen"):
            build_problem(cruise_data, params, frozen, lock=None, prev=None,
                          eps_p=0.01, eps_m=0.01)


class TestParams:
    @pytest.mark.parametrize("kw", [
        dict(n_K=-1, eta=0.9, eps_s=0.5),
        dict(n_K=2, eta=1.0, eps_s=0.5),
        dict(n_K=2, eta=0.9, eps_s=1.0),
        dict(n_K=2, eta=0.9, eps_s=0.5, eps_c=0.0),
        dict(n_K=2, eta=0.9, eps_s=0.5, max_iters=0),
        dict(n_K=2, eta=0.9, eps_s=0.5, init_strategy="magic"),
    ])
    def test_rejects_bad_ranges(self, kw):
        with pytest.raises(ValueError):
            SynthesisParams(**kw)


def _no_disturbance_model():
    """Stable plant with singleton disturbance sets: trivially designable."""
    A = np.array([[0.5, 0.0], [0.1, 0.4]])
    B = np.array([[1.0], [0.5]])
    zero = HPolytope.from_box([0.0, 0.0], [0.0, 0.0])
    tiny = HPolytope.from_box([-1e-4, -1e-4], [1e-4, 1e-4])
    return PlantModel(
        A=A, B=B,
        S=HPolytope.from_box([-1.0, -1.0], [1.0, 1.0]),
        X=HPolytope.from_box([-10.0, -10.0], [10.0, 10.0]),
        U=HPolytope.from_box([-5.0], [5.0]),
        D=zero, W=zero, V=tiny,
        eps_p=0.01, eps_m=0.01, eps_s=0.5)


class TestLoop:
    @pytest.fixture(scope="class")
    def small_run(self):
        m = _no_disturbance_model()
        d = derive_sets(m)
        params = SynthesisParams(n_K=0, eta=0.9, eps_s=0.5, max_iters=40)
        state = initialize(m, d, params)
        return m, d, iterate(state)

    def test_every_solve_optimal_and_monotone(self, small_run):
        _, _, res = small_run
        assert all("infeasible" not in it.solver.lower()
                   for it in res.state.iterates)
        J = res.J_history
        assert all(J[i + 1] <= J[i] + 1e-9 for i in range(len(J) - 1))

    def test_factors_stay_invertible(self, small_run):
        _, _, res = small_run
        for it in res.state.iterates:
            assert min(it.min_sing.values()) > 1e-9

    def test_certified_extraction_passes_strict_suite(self, small_run):
        m, d, res = small_run
        assert res.certified, f"expected certification, got {res.verdict}"
        K, sets, report = extract(res)
        assert report.all_ok
        # re-verify independently at strict tolerance
        again = verify_all(m, d, K, sets, eta=0.9, facet_tol=1e-8)
        assert again.all_ok

    def test_extract_refused_without_certification(self, small_run):
        m, d, res = small_run
        import copy
        stalled = copy.copy(res)
        stalled.verdict = "stalled"
        with pytest.raises(ValueError, match="certified"):
            extract(stalled)

    def test_lock_alternation_on_solved_iterates(self, small_run):
        _, _, res = small_run
        its = res.state.iterates
        for prev, cur in zip(its, its[1:]):
            if cur.lock == "HI_HO":
                np.testing.assert_allclose(cur.values["HtI"],
                                           prev.values["HtI"], atol=1e-7)
                np.testing.assert_allclose(cur.values["HO"],
                                           prev.values["HO"], atol=1e-7)
            else:
                np.testing.assert_allclose(cur.values["HtIi"],
                                           prev.values["HtIi"], atol=1e-7)
                np.testing.assert_allclose(cur.values["HOi"],
                                           prev.values["HOi"], atol=1e-7)

    def test_infinite_eps_c_stops_after_one_iteration(self):
        m = _no_disturbance_model()
        d = derive_sets(m)
        params = SynthesisParams(n_K=0, eta=0.9, eps_s=0.5, eps_c=np.inf)
        state = initialize(m, d, params)
        res = iterate(state)
        assert res.final.k == 1

    def test_absurd_contraction_fails_initialization(self, cruise):
        params = SynthesisParams(n_K=2, eta=1e-6, eps_s=0.6,
                                 init_grid=(0.1, 1.0, 10.0))
        with pytest.raises(InitializationFailedError):
            initialize(cruise.model, cruise.derived, params)

    def test_eps_s_must_clear_model_noise_budget(self, cruise):
        params = SynthesisParams(n_K=2, eta=0.9, eps_s=0.015)
        with pytest.raises(ValueError, match="eps_s"):
            initialize(cruise.model, cruise.derived, params)
