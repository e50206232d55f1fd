import numpy as np
import pytest

from handsoff import polytope as pt
from handsoff.conditions import (GuaranteeReport, InvariantSets,
                                 build_inner_set, check_C1, check_C2,
                                 check_I3_direct, check_I_conditions,
                                 check_O_conditions, compare_inner_forms,
                                 compute_Tmax, verify_all)
from handsoff.controller import (ClosedLoop, ControllerRealization,
                                 assemble_closed_loop, is_schur)
from handsoff.polytope import HPolytope, SymmetricBoxImage, VPolytope
from handsoff.tolerances import DEFAULT_TOL

PUB = DEFAULT_TOL.published
ZERO_Z4 = VPolytope([[0.0, 0.0, 0.0, 0.0]])


@pytest.fixture(scope="module")
def cl(cruise):
    return assemble_closed_loop(cruise.model, cruise.controller)


class TestC1:
    def test_cruise_passes_within_allowance(self, cruise, cl):
        res = check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z,
                       eta=0.99, facet_tol=PUB)
        assert res and res.margin < 0

    def test_zero_dynamics_always_contract(self, cruise):
        CL0 = ClosedLoop(np.zeros((4, 4)), np.zeros((4, 4)),
                         np.zeros((1, 4)), np.zeros((1, 4)), 2, 2)
        res = check_C1(CL0, cruise.sets.lifted_inner, ZERO_Z4, eta=0.5,
                       facet_tol=1e-9)
        assert res and res.margin == pytest.approx(-0.5, abs=1e-12)

    def test_eta_lowered_until_failure_reports_facet(self, cruise, cl):
        # bisection: the worst facet support sits just below 0.99
        res99 = check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z,
                         eta=0.99, facet_tol=1e-9)
        lhs_max = 0.99 + res99.margin
        bad = check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z,
                       eta=lhs_max - 1e-4, facet_tol=1e-9)
        assert not bad
        assert "facet" in bad.detail

    def test_eta_range_enforced(self, cruise, cl):
        with pytest.raises(ValueError):
            check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z, eta=1.0)


class TestC2:
    def test_cruise_passes(self, cruise):
        res = check_C2(cruise.sets.lifted_inner, cruise.model.S, 0.6, 0.01,
                       0.01, facet_tol=PUB)
        assert res and res.margin < 0

    def test_scaled_up_set_fails(self, cruise):
        # Htilde / 10 describes a set ten times larger
        big = SymmetricBoxImage(cruise.sets.lifted_inner.Htilde / 10.0)
        res = check_C2(big, cruise.model.S, 0.6, 0.01, 0.01, facet_tol=PUB)
        assert not res

    def test_tiny_set_passes(self, cruise):
        tiny = SymmetricBoxImage(np.eye(4) * 1e3)
        res = check_C2(tiny, cruise.model.S, 0.6, 0.01, 0.01, facet_tol=1e-9)
        assert res

    def test_shrinking_never_flips_to_false(self, cruise):
        # monotone in scaling: smaller inner set keeps the check true
        base = cruise.sets.lifted_inner.Htilde
        for c in (1.0, 2.0, 5.0, 50.0):
            res = check_C2(SymmetricBoxImage(base * c), cruise.model.S,
                           0.6, 0.01, 0.01, facet_tol=PUB)
            assert res


class TestIConditions:
    def test_cruise_lifted_route(self, cruise, cl):
        c1 = check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z, 0.99,
                      PUB)
        c2 = check_C2(cruise.sets.lifted_inner, cruise.model.S, 0.6, 0.01,
                      0.01, PUB)
        inner = build_inner_set(cruise.sets.lifted_inner, cruise.derived.N, 2)
        res = check_I_conditions(inner, cruise.model.S, 0.6, cl,
                                 cruise.derived.Z, cruise.derived.N,
                                 lifted_inner=cruise.sets.lifted_inner,
                                 c1=c1, c2=c2, eta=0.99, facet_tol=PUB)
        assert res.I1 and res.I2 and res.I3
        assert res.alpha == pytest.approx(
            1.0 / np.linalg.norm(cruise.sets.lifted_inner.Htilde, 2),
            abs=1e-15)
        assert res.beta == 0.99
        # the two certification routes agree
        assert res.direct_I3.status == "pass"

    def test_zero_exogenous_passes_all_horizons(self, cruise, cl):
        inner = build_inner_set(cruise.sets.lifted_inner, cruise.derived.N, 2)
        direct = check_I3_direct(cl, inner, cruise.derived.N, beta=0.99,
                                 Z=ZERO_Z4, N_trunc=60, facet_tol=1e-12)
        assert direct.status == "pass"
        assert direct.worst_margin < 0

    def test_direct_route_without_certificate(self, cruise, cl):
        inner = build_inner_set(cruise.sets.lifted_inner, cruise.derived.N, 2)
        res = check_I_conditions(inner, cruise.model.S, 0.6, cl,
                                 cruise.derived.Z, cruise.derived.N,
                                 eta=0.99, facet_tol=PUB)
        assert res.I1 and res.I2
        assert res.I3  # direct truncated check carries the verdict
        assert res.alpha == pytest.approx(res.alpha_direct)

    def test_direct_fail_is_definitive(self, cruise, cl):
        # an inner set far too small: the forced response escapes quickly
        tiny = SymmetricBoxImage(np.eye(4) * 1e4)
        inner = build_inner_set(tiny, cruise.derived.N, 2)
        direct = check_I3_direct(cl, inner, cruise.derived.N, beta=0.99,
                                 Z=cruise.derived.Z, N_trunc=50,
                                 facet_tol=1e-9)
        assert direct.status == "fail"


class TestOConditions:
    def test_cruise_all_pass(self, cruise, cl):
        res = check_O_conditions(cl, cruise.sets.outer, cruise.derived.S_c,
                                 cruise.model.X, cruise.model.U,
                                 cruise.derived.Z, facet_tol=PUB)
        assert res.O1 and res.O2 and res.O3 and res.O4
        assert all(c.margin < 0 for c in res)

    def test_shrunk_outer_fails_O1(self, cruise, cl):
        shrunk = SymmetricBoxImage(cruise.sets.outer.Htilde * 2.0)
        res = check_O_conditions(cl, shrunk, cruise.derived.S_c,
                                 cruise.model.X, cruise.model.U,
                                 cruise.derived.Z, facet_tol=PUB)
        assert not res.O1

    def test_degenerate_reduction_to_A_invariance(self, cruise):
        # Z = {0}, no controller, box outer set: O2 is invariance of A alone
        m = cruise.model
        K0 = ControllerRealization.zero(m.n, m.m, 0)
        A_half = ClosedLoop(0.5 * np.eye(2),
                            np.hstack([np.eye(2), np.zeros((2, 2))]),
                            np.zeros((1, 2)), np.zeros((1, 4)), 2, 0)
        outer = SymmetricBoxImage(np.eye(2))
        res = check_O_conditions(A_half, outer,
                                 VPolytope([[0.5, 0.5], [-0.5, -0.5]]),
                                 m.X, m.U, ZERO_Z4, facet_tol=1e-9)
        assert res.O2 and res.O2.margin == pytest.approx(-0.5, abs=1e-12)

    def test_invariance_corroborated_by_simulation(self, cruise, cl):
        """O2 implies sampled trajectories never leave the outer set."""
        rng = np.random.default_rng(47)
        outer = cruise.sets.outer
        z_sampler = pt.UniformSampler(cruise.derived.Z)
        for corner in outer.corners()[::4]:
            xi = corner.copy()
            for _ in range(1000):
                xi = cl.A_CL @ xi + cl.B_CL @ z_sampler.draw(rng)
            assert outer.contains(xi, tol=1e-9)


class TestTmax:
    def test_zero_dynamics(self, cruise):
        CL0 = ClosedLoop(np.zeros((2, 2)),
                         np.hstack([np.eye(2), np.zeros((2, 2))]),
                         np.zeros((1, 2)), np.zeros((1, 4)), 2, 0)
        cert = compute_Tmax(CL0, cruise.derived.S_c, alpha=0.3, beta=0.99)
        assert cert.T_max == 1

    def test_cruise_value(self, cruise, cl):
        alpha = 1.0 / np.linalg.norm(cruise.sets.lifted_inner.Htilde, 2)
        cert = compute_Tmax(cl, cruise.derived.S_c, alpha, 0.99)
        assert cert.T_max == cruise.report.T_max
        assert cert.mu == pytest.approx(
            max(np.linalg.norm(v) for v in cruise.derived.S_c.V))
        # exact power-iteration certificate: the bound holds on the suffix
        assert np.all(cert.norms[cert.T_max - 1:] <= cert.threshold)
        if cert.T_max > 1:
            assert cert.norms[cert.T_max - 2] > cert.threshold

    def test_monotone_in_beta(self, cruise, cl):
        alpha = 0.28
        values = [compute_Tmax(cl, cruise.derived.S_c, alpha, b).T_max
                  for b in (0.9, 0.95, 0.99)]
        assert values == sorted(values)

    def test_non_schur_rejected(self, cruise):
        m = cruise.model
        open_loop = ClosedLoop(m.A, np.hstack([np.eye(2), np.zeros((2, 2))]),
                               np.zeros((1, 2)), np.zeros((1, 4)), 2, 0)
        with pytest.raises(ValueError):
            compute_Tmax(open_loop, cruise.derived.S_c, 0.3, 0.99)


class TestTheoremSoundness:
    def test_c1_c2_imply_direct_i3_never_false(self, cruise, cl):
        """Executable soundness: lifted certificate implies the truncated
        check cannot fail on the same data, for any horizon up to 50."""
        for scale in (1.0, 1.2, 2.0):
            lifted = SymmetricBoxImage(cruise.sets.lifted_inner.Htilde * scale)
            c1 = check_C1(cl, lifted, cruise.derived.Z, 0.99, PUB)
            c2 = check_C2(lifted, cruise.model.S, 0.6, 0.01, 0.01, PUB)
            if not (c1 and c2):
                continue
            inner = build_inner_set(lifted, cruise.derived.N, 2)
            direct = check_I3_direct(cl, inner, cruise.derived.N, 0.99,
                                     cruise.derived.Z, N_trunc=50,
                                     facet_tol=PUB)
            assert direct.status != "fail"

    def test_c1_implies_schur(self, cruise, cl):
        c1 = check_C1(cl, cruise.sets.lifted_inner, cruise.derived.Z, 0.99,
                      PUB)
        assert c1
        assert is_schur(cl)[0]


class TestFullReport:
    def test_cruise_report_all_ok(self, cruise):
        rpt = cruise.report
        assert rpt.all_ok
        assert rpt.schur and rpt.spectral_radius < 1
        assert rpt.T_max is not None and rpt.T_max >= 1
        assert rpt.failed() == []

    def test_report_serialization(self, cruise):
        obj = cruise.report.to_json()
        assert obj["all_ok"] is True
        assert set(obj) >= {"C1", "C2", "I1", "I2", "I3", "O1", "O2", "O3",
                            "O4", "schur", "alpha", "beta", "mu", "T_max"}

    def test_explicit_vs_implicit_inner_forms_agree(self, cruise):
        inner = build_inner_set(cruise.sets.lifted_inner, cruise.derived.N, 2)
        fwd, bwd = compare_inner_forms(inner, cruise.sets.explicit_inner)
        assert abs(fwd) <= PUB and abs(bwd) <= PUB

    def test_rounding_marginal_classification(self, cruise, cl):
        # inflate the lifted set until C2 sits in the (0, 5e-3] band
        base = cruise.sets.lifted_inner.Htilde
        res0 = check_C2(cruise.sets.lifted_inner, cruise.model.S, 0.6, 0.01,
                        0.01, facet_tol=PUB)
        worst = 0.58 + res0.margin
        factor = worst / (0.58 + 0.002)  # target margin about +2e-3
        bumped = SymmetricBoxImage(base * factor)
        res = check_C2(bumped, cruise.model.S, 0.6, 0.01, 0.01, facet_tol=PUB)
        assert res.passed and res.rounding_marginal
        assert 0 < res.margin <= PUB

    def test_tmax_validation(self):
        with pytest.raises(ValueError):
            GuaranteeReport(
                C1=None, C2=None, I1=None, I2=None, I3=None, O1=None,
                O2=None, O3=None, O4=None, schur=True, spectral_radius=0.5,
                alpha=0.1, beta=0.9, mu=1.0, T_max=0)


def test_invariant_sets_json_roundtrip(cruise, tmp_path):
    path = tmp_path / "sets.json"
    cruise.sets.save(path)
    back = InvariantSets.load(path)
    np.testing.assert_array_equal(back.lifted_inner.Htilde,
                                  cruise.sets.lifted_inner.Htilde)
    np.testing.assert_array_equal(back.outer.Htilde,
                                  cruise.sets.outer.Htilde)
    np.testing.assert_array_equal(back.explicit_inner.H,
                                  cruise.sets.explicit_inner.H)
