import math

import numpy as np
import pytest

from taxharvest.model import ControlParams, Params, State, controlled_vector_field, jacobian, vector_field

from conftest import BASELINE, CONTROL_FIXTURE, random_params


def finite_difference_jacobian(p, state, h=1e-6):
    state = np.asarray(state, dtype=float)
    J = np.empty((3, 3))
    for j in range(3):
        plus = state.copy()
        minus = state.copy()
        plus[j] += h
        minus[j] -= h
        fp = np.asarray(vector_field(p, plus))
        fm = np.asarray(vector_field(p, minus))
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


class TestParamsValidation:
    def test_baseline_constructs(self, baseline):
        assert baseline.r == 1.0
        assert baseline.a == 50.0

    def test_a_defaults_to_half_capacity(self):
        p = Params(**{k: v for k, v in BASELINE.items() if k != "a"})
        assert p.a == BASELINE["K"] / 2

    @pytest.mark.parametrize("field,value", [
        ("r", 0.0), ("r", -1.0), ("K", 0.0), ("delta", 0.0), ("a", -1.0),
        ("pi", -0.1), ("alpha", -0.1), ("beta", -0.1), ("gamma", -0.1),
        ("sigma", -0.1), ("m", -0.1), ("n", -0.1), ("d", -0.1), ("mu", -0.1),
        ("l", 0.0), ("l", 1.5), ("r", math.nan), ("K", math.inf),
    ])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(ValueError):
            Params(**{**BASELINE, field: value})

    def test_json_round_trip(self, baseline):
        again = Params.from_json(baseline.to_json())
        assert again == baseline

    def test_json_rejects_unknown_keys(self):
        doc = dict(BASELINE)
        doc["tau"] = 1.0
        with pytest.raises(ValueError, match="unknown"):
            Params.from_dict(doc)

    def test_json_rejects_missing_keys(self):
        doc = dict(BASELINE)
        del doc["r"]
        with pytest.raises(ValueError, match="missing"):
            Params.from_dict(doc)

    def test_json_allows_omitted_a(self):
        doc = {k: v for k, v in BASELINE.items() if k != "a"}
        assert Params.from_dict(doc).a == BASELINE["K"] / 2


class TestControlParamsValidation:
    def test_fixture_constructs(self, control_fixture):
        assert control_fixture.u_max == 2.0

    @pytest.mark.parametrize("field,value", [
        ("v3", 0.0), ("v3", -1.0), ("u_max", 0.0), ("t1", 0.0), ("eps1", math.nan),
    ])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(ValueError):
            ControlParams(**{**CONTROL_FIXTURE, field: value})

    def test_json_round_trip(self, control_fixture):
        assert ControlParams.from_json(control_fixture.to_json()) == control_fixture

    def test_json_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown"):
            ControlParams.from_dict({**CONTROL_FIXTURE, "bogus": 1})


class TestState:
    def test_accepts_nonnegative(self):
        s = State(1.0, 0.0, 2.5)
        assert s.as_tuple() == (1.0, 0.0, 2.5)

    @pytest.mark.parametrize("bad", [(-1.0, 0, 0), (0, math.nan, 0), (0, 0, -0.5)])
    def test_rejects_bad_components(self, bad):
        with pytest.raises(ValueError):
            State(*bad)


class TestVectorField:
    def test_origin_is_equilibrium(self, baseline):
        assert vector_field(baseline, (0.0, 0.0, 0.0)) == (0.0, 0.0, 0.0)

    def test_capacity_point_is_equilibrium(self, baseline):
        dfbar, df, dg = vector_field(baseline, (baseline.K, 0.0, 0.0))
        assert dfbar == 0.0 and df == 0.0 and dg == 0.0

    def test_hand_evaluated_point(self, baseline):
        # term-by-term arithmetic at (10, 5, 2):
        #   dfbar = 10*0.875 - 1.0 - 0.2   = 7.55
        #   df    = 1.0 - 0.1 - 2.0        = -1.1
        #   dg    = 0.1 + 0.05 + 0.875 - 0.4 - 0.2 = 0.425
        got = vector_field(baseline, (10.0, 5.0, 2.0))
        assert got == pytest.approx((7.55, -1.1, 0.425), rel=1e-12)

    def test_rejects_non_finite(self, baseline):
        with pytest.raises(ValueError):
            vector_field(baseline, (math.nan, 0.0, 0.0))
        with pytest.raises(ValueError):
            vector_field(baseline, (0.0, math.inf, 0.0))

    def test_accepts_state_dataclass(self, baseline):
        assert vector_field(baseline, State(10.0, 5.0, 2.0)) == \
            vector_field(baseline, (10.0, 5.0, 2.0))

    def test_coordinate_planes_invariant(self):
        rng = np.random.default_rng(101)
        for _ in range(25):
            p = random_params(rng)
            s = rng.uniform(0.0, p.K, 3)
            for axis in range(3):
                pinned = s.copy()
                pinned[axis] = 0.0
                assert vector_field(p, pinned)[axis] == 0.0

    def test_vectorised_evaluation_matches_scalar(self, baseline):
        rng = np.random.default_rng(7)
        pts = rng.uniform(0.0, 50.0, (40, 3))
        vec = vector_field(baseline, (pts[:, 0], pts[:, 1], pts[:, 2]))
        for i, point in enumerate(pts):
            scalar = vector_field(baseline, point)
            for comp in range(3):
                assert vec[comp][i] == pytest.approx(scalar[comp], rel=1e-14, abs=1e-14)


class TestControlledVectorField:
    def test_zero_control_reduces_to_uncontrolled(self, baseline, control_fixture):
        rng = np.random.default_rng(2)
        for _ in range(10):
            s = rng.uniform(0.0, 80.0, 3)
            assert controlled_vector_field(baseline, control_fixture, s, 0.0) == \
                vector_field(baseline, s)

    def test_origin_fixed_under_any_control(self, baseline, control_fixture):
        for u in (0.0, 0.7, 2.0):
            assert controlled_vector_field(baseline, control_fixture, (0.0, 0.0, 0.0), u) == \
                (0.0, 0.0, 0.0)

    def test_subtraction_oracle(self, baseline, control_fixture):
        base = vector_field(baseline, (10.0, 5.0, 2.0))
        got = controlled_vector_field(baseline, control_fixture, (10.0, 5.0, 2.0), 1.0)
        assert got == pytest.approx((base[0] - 1.0, base[1] - 1.0, base[2] - 0.1), rel=1e-12)

    @pytest.mark.parametrize("u", [-0.1, 2.1, math.nan])
    def test_rejects_out_of_range_control(self, baseline, control_fixture, u):
        with pytest.raises(ValueError):
            controlled_vector_field(baseline, control_fixture, (1.0, 1.0, 1.0), u)


class TestJacobian:
    def test_diagonal_at_origin(self, baseline):
        J = jacobian(baseline, (0.0, 0.0, 0.0))
        assert np.allclose(np.diag(J), [1.0, -0.4, 0.3], rtol=1e-12)
        off = J - np.diag(np.diag(J))
        assert np.all(off == 0.0)

    def test_capacity_point_formal_entry(self, baseline):
        J = jacobian(baseline, (baseline.K, 0.0, 0.0))
        assert J[1, 1] == pytest.approx(baseline.alpha * baseline.K - baseline.sigma, rel=1e-12)
        assert J[1, 1] == pytest.approx(1.6, rel=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            p = random_params(rng)
            s = rng.uniform(0.0, p.K, 3)
            J = jacobian(p, s)
            J_fd = finite_difference_jacobian(p, s)
            # the FD rounding floor per row is ~eps*|f_row|/h; allow it on
            # top of the 1e-5 relative band so near-zero entries are not
            # compared against pure cancellation noise
            row_floor = 1e-9 * np.maximum(1.0, np.abs(vector_field(p, s)))
            tol = 1e-5 * np.abs(J_fd) + row_floor[:, None]
            assert np.all(np.abs(J - J_fd) <= tol)


def test_equilibria_have_zero_field(baseline):
    from taxharvest.equilibria import all_equilibria

    for rep in all_equilibria(baseline):
        if rep.point is None:
            continue
        scale = 1.0 + float(np.max(np.abs(rep.point)))
        assert max(abs(v) for v in vector_field(baseline, rep.point)) <= 1e-12 * scale
