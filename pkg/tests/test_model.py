import json

import numpy as np
import pytest

from handsoff import polytope as pt
from handsoff.model import (PlantModel, derive_sets, model_from_json,
                            model_to_json, outer_box_Z, validate)
from handsoff.polytope import HPolytope, VPolytope


def test_cruise_model_validates(cruise):
    report = validate(cruise.model)
    assert report.ok
    names = [c.name for c in report.checks]
    assert "A*S + W + D inside X" in names
    # degenerate disturbance segments are noted, not failed
    assert any("lower-dimensional" in n for n in report.notes)


def test_inflated_noise_fails_2a(cruise):
    m = cruise.model
    fat_V = HPolytope.from_box([-0.5, -0.5], [0.5, 0.5])
    bad = PlantModel(A=m.A, B=m.B, S=m.S, X=m.X, U=m.U, D=m.D, W=m.W,
                     V=fat_V, eps_p=0.01, eps_m=0.01, eps_s=0.6)
    report = validate(bad)
    assert not report.ok
    check = next(c for c in report.checks if c.name == "V inside eps_p*S")
    assert not check.passed
    assert check.margin == pytest.approx(0.49, abs=1e-9)


def test_degenerate_disturbances_reduce_2c_to_AS_in_X():
    # W = D = {0} and S = X/2: the state-propagation check is A*S inside X
    A = np.array([[0.0, 1.0], [-0.5, 0.0]])
    B = np.array([[0.0], [1.0]])
    S = HPolytope.from_box([-1.0, -1.0], [1.0, 1.0])
    X = HPolytope.from_box([-2.0, -2.0], [2.0, 2.0])
    zero = HPolytope.from_box([0.0, 0.0], [0.0, 0.0])
    V = HPolytope.from_box([-0.001, -0.001], [0.001, 0.001])
    m = PlantModel(A=A, B=B, S=S, X=X,
                   U=HPolytope.from_box([-1.0], [1.0]),
                   D=zero, W=zero, V=V, eps_p=0.01, eps_m=0.01, eps_s=0.5)
    report = validate(m)
    check = next(c for c in report.checks if c.name == "A*S + W + D inside X")
    # worst facet slack equals that of A*S in X alone
    worst = max(pt.support(S, A.T @ X.H[i]) - X.b[i]
                for i in range(X.num_facets))
    assert check.margin == pytest.approx(worst, abs=1e-12)
    assert check.passed


class TestDeriveSets:
    def test_cruise_w_plus_d_segment(self, cruise):
        d = cruise.derived
        B = np.array([0.005, 0.1])
        WD = pt.minkowski_sum(cruise.model.W, cruise.model.D)
        np.testing.assert_allclose(np.sort(WD.V, axis=0),
                                   np.sort([-26.5 * B, 26.5 * B], axis=0),
                                   atol=1e-12)
        # S_plus inside X with strictly negative slack
        res = pt.contains_polytope(d.S_plus, cruise.model.X)
        assert res and res.worst_slack < 0

    def test_cruise_noise_hull_is_pm_002_box(self, cruise):
        expected = {(-0.02, -0.02), (-0.02, 0.02), (0.02, -0.02), (0.02, 0.02)}
        got = {tuple(np.round(v, 12)) for v in cruise.derived.N.V}
        assert got == expected

    def test_deterministic_vertex_ordering(self, cruise):
        d2 = derive_sets(cruise.model)
        np.testing.assert_array_equal(cruise.derived.S_c.V, d2.S_c.V)
        np.testing.assert_array_equal(cruise.derived.Z.V, d2.Z.V)

    def test_omega_matches_s_c(self, cruise):
        np.testing.assert_array_equal(cruise.derived.omega,
                                      cruise.derived.S_c.V)

    def test_z_dimension(self, cruise):
        assert cruise.derived.Z.dim == 2 * cruise.model.n

    def test_validate_implies_derive_succeeds(self, cruise):
        assert validate(cruise.model).ok
        derive_sets(cruise.model)  # must not raise


class TestOuterBoxZ:
    def test_cruise_diagonal_scaling(self, cruise):
        hz = outer_box_Z(cruise.derived)
        np.testing.assert_allclose(
            np.diagonal(hz.H_Z), [1 / 0.0075, 1 / 0.15, 100.0, 100.0],
            rtol=1e-12)
        assert not hz.symmetrized

    def test_unit_box_gives_identity(self):
        class Fake:
            Z = VPolytope([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        hz = outer_box_Z(Fake())
        np.testing.assert_allclose(hz.H_Z, np.eye(2))

    def test_asymmetric_z_reports_symmetrization(self):
        class Fake:
            Z = VPolytope([[2.0, 1.0], [2.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        hz = outer_box_Z(Fake())
        assert hz.symmetrized
        np.testing.assert_allclose(np.diagonal(hz.H_Z), [0.5, 1.0])

    def test_sampled_points_inside(self, cruise):
        hz = outer_box_Z(cruise.derived)
        rng = np.random.default_rng(41)
        sampler = pt.UniformSampler(cruise.derived.Z)
        for _ in range(200):
            z = sampler.draw(rng)
            assert np.all(np.abs(hz.H_Z @ z) <= 1.0 + 1e-12)


def test_json_roundtrip(cruise, tmp_path):
    obj = model_to_json(cruise.model)
    back = model_from_json(json.loads(json.dumps(obj)))
    np.testing.assert_array_equal(back.A, cruise.model.A)
    np.testing.assert_array_equal(back.B, cruise.model.B)
    np.testing.assert_array_equal(back.S.H, cruise.model.S.H)
    np.testing.assert_array_equal(back.W.b, cruise.model.W.b)
    assert back.eps_s == cruise.model.eps_s
    assert back.Ts == cruise.model.Ts


def test_dimension_validation():
    with pytest.raises(ValueError):
        PlantModel(A=np.eye(2), B=np.ones((3, 1)),
                   S=HPolytope.from_box([-1, -1], [1, 1]),
                   X=HPolytope.from_box([-2, -2], [2, 2]),
                   U=HPolytope.from_box([-1], [1]),
                   D=HPolytope.from_box([-1, -1], [1, 1]),
                   W=HPolytope.from_box([-1, -1], [1, 1]),
                   V=HPolytope.from_box([-1, -1], [1, 1]),
                   eps_p=0.1, eps_m=0.1, eps_s=0.5)
