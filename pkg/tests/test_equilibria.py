import numpy as np
import pytest

from taxharvest.cubic import cubic_roots, real_cubic_roots
from taxharvest.equilibria import (
    CLASS_BOUNDARY,
    CLASS_COEXISTENCE,
    CLASS_FIRM_FREE,
    CLASS_FORMAL_FREE,
    CLASS_GOVERNMENT_FREE,
    CLASS_TRIVIAL,
    all_equilibria,
    closed_form_equilibria,
    consistent_cubic_coefficients,
    cubic_coefficients,
    formal_free_revenue,
    newton_equilibrium,
    solve_E3,
    solve_coexistence,
    _start_lattice,
)
from taxharvest.model import Params, vector_field

from conftest import BASELINE, random_params


def by_class(reports, label):
    picked = [r for r in reports if r.class_label == label]
    assert picked, f"no report with class {label}"
    return picked[0]


class TestCubicSolver:
    def test_known_roots(self):
        # (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        assert real_cubic_roots(-6.0, 11.0, -6.0) == pytest.approx([1.0, 2.0, 3.0], abs=1e-12)

    def test_single_real_root_with_complex_pair(self):
        # (x-1)(x^2+1) = x^3 - x^2 + x - 1
        roots = cubic_roots(-1.0, 1.0, -1.0)
        reals = [z for z in roots if abs(z.imag) < 1e-12]
        pair = sorted(z for z in roots if abs(z.imag) >= 1e-12)
        assert len(reals) == 1 and reals[0].real == pytest.approx(1.0, abs=1e-12)
        assert pair[0] == pytest.approx(-1j, abs=1e-12)
        assert pair[1] == pytest.approx(1j, abs=1e-12)

    def test_triple_root(self):
        assert real_cubic_roots(-3.0, 3.0, -1.0) == pytest.approx([1.0, 1.0, 1.0], abs=1e-7)

    def test_random_cubics_against_numpy(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            b, c, d = rng.uniform(-50, 50, 3)
            mine = np.sort_complex(cubic_roots(b, c, d))
            ref = np.sort_complex(np.roots([1.0, b, c, d]))
            scale = max(1.0, float(np.max(np.abs(ref))))
            assert np.max(np.abs(mine - ref)) < 1e-8 * scale


class TestClosedForm:
    def test_baseline_classes_and_points(self, baseline):
        reports = closed_form_equilibria(baseline)
        assert [r.class_label for r in reports] == [
            CLASS_TRIVIAL, CLASS_BOUNDARY, CLASS_FIRM_FREE, CLASS_GOVERNMENT_FREE]
        assert all(r.feasible for r in reports)

    def test_firm_free_substitution(self, baseline):
        e2 = by_class(closed_form_equilibria(baseline), CLASS_FIRM_FREE)
        assert e2.point[2] == (baseline.d - baseline.mu) / baseline.delta
        assert e2.point[2] == pytest.approx(6.0, rel=1e-12)
        assert e2.point[0] == 0.0 and e2.point[1] == 0.0

    def test_government_free_substitution(self, baseline):
        e4 = by_class(closed_form_equilibria(baseline), CLASS_GOVERNMENT_FREE)
        assert e4.point[0] == baseline.sigma / baseline.alpha
        expected_f = (baseline.r * (baseline.alpha * baseline.K - baseline.sigma)
                      / (baseline.alpha * (baseline.K * baseline.alpha + baseline.r * baseline.pi)))
        assert e4.point[1] == expected_f
        assert e4.point == pytest.approx([20.0, 32.0, 0.0], rel=1e-12)
        assert e4.feasible  # sigma = 0.4 < alpha*K = 2

    def test_firm_free_infeasible_when_decay_dominates(self):
        p = Params(**{**BASELINE, "d": 0.1, "mu": 0.2})
        e2 = by_class(closed_form_equilibria(p), CLASS_FIRM_FREE)
        assert not e2.feasible
        assert not e2.conditions["d_gt_mu"]
        # the mathematical stationary point still annihilates the field
        assert e2.residual_norm <= 1e-12

    def test_government_free_alpha_zero(self):
        p = Params(**{**BASELINE, "alpha": 0.0})
        e4 = by_class(closed_form_equilibria(p), CLASS_GOVERNMENT_FREE)
        assert not e4.feasible
        assert e4.point is None
        assert e4.reason == "alpha zero"

    def test_government_free_collapses_onto_boundary(self, baseline):
        # continuity sweep sigma -> alpha*K: the formal component vanishes
        gaps = []
        for sigma in (1.6, 1.9, 1.99, 2.0):
            p = Params(**{**BASELINE, "sigma": sigma})
            e4 = by_class(closed_form_equilibria(p), CLASS_GOVERNMENT_FREE)
            gaps.append(float(np.max(np.abs(e4.point - np.array([p.K, 0.0, 0.0])))))
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] == 0.0
        p = Params(**{**BASELINE, "sigma": 2.0})
        assert not by_class(closed_form_equilibria(p), CLASS_GOVERNMENT_FREE).feasible

    def test_residuals_tiny_everywhere(self, baseline):
        for rep in closed_form_equilibria(baseline):
            scale = 1.0 + float(np.max(np.abs(rep.point)))
            assert rep.residual_norm <= 1e-9 * scale


class TestCubicCoefficients:
    def test_baseline_frozen_values(self, baseline):
        coeffs = cubic_coefficients(baseline)
        # substitution into the quoted formulas, products recomputed by hand:
        # l1 = (5 - 0.3 - 5)/0.05, l2 = (2.5 - 515 + 36)/0.05, l3 = -5000*2.32/0.05
        assert coeffs.l1 == pytest.approx(-6.0, rel=1e-12)
        assert coeffs.l2 == pytest.approx(-9530.0, rel=1e-12)
        assert coeffs.l3 == pytest.approx(-232000.0, rel=1e-12)

    def test_consistent_variant_differs_only_in_linear_term(self, baseline):
        classic = cubic_coefficients(baseline)
        consistent = consistent_cubic_coefficients(baseline)
        assert classic.l1 == consistent.l1
        assert classic.l3 == consistent.l3
        # the linear terms differ by (a^2 - a) r delta / (r delta) = a(a-1)
        assert consistent.l2 - classic.l2 == pytest.approx(
            baseline.a * (baseline.a - 1.0), rel=1e-12)

    def test_rejects_degenerate_r_delta(self):
        class Fake:
            r, K, pi, alpha, beta, a = 0.0, 100.0, 0.5, 0.02, 0.6, 50.0
            gamma, sigma, l, m, n, d, mu, delta = 0.01, 0.4, 0.5, 0.6, 0.1, 0.5, 0.2, 0.05

        with pytest.raises(ValueError):
            cubic_coefficients(Fake())


class TestSolveE3:
    def test_baseline_reduces_to_firm_free(self, baseline):
        reports = solve_E3(baseline)
        assert len(reports) == 1
        rep = reports[0]
        assert rep.class_label == CLASS_FORMAL_FREE
        assert not rep.feasible
        assert not rep.conditions["admissible_root_found"]
        assert rep.conditions["d_gt_mu"]
        # reduced structure coincides with the firm-free point
        e2 = by_class(closed_form_equilibria(baseline), CLASS_FIRM_FREE)
        assert np.array_equal(rep.point, e2.point)

    def test_reduces_to_origin_without_alternative_revenue(self):
        p = Params(**{**BASELINE, "d": 0.1, "mu": 0.5})
        rep = solve_E3(p)[0]
        assert not rep.feasible
        assert np.array_equal(rep.point, [0.0, 0.0, 0.0])

    def test_admissible_root_is_cubic_root_and_equilibrium(self, formal_free_root):
        reports = solve_E3(formal_free_root)
        feasible = [r for r in reports if r.feasible]
        assert feasible
        coeffs = consistent_cubic_coefficients(formal_free_root)
        for rep in feasible:
            x = rep.point[0]
            value = ((x + coeffs.l1) * x + coeffs.l2) * x + coeffs.l3
            assert abs(value) <= 1e-9 * max(1.0, abs(coeffs.l3))
            assert rep.point[1] == 0.0
            dfbar, _, dg = vector_field(formal_free_root, rep.point)
            assert abs(dfbar) <= 1e-9 and abs(dg) <= 1e-9
            assert rep.point[2] == formal_free_revenue(formal_free_root, x)

    def test_flags_root_count_disagreement(self, baseline, formal_free_root):
        # at the baseline both coefficient sets agree (no admissible root);
        # with the lower decay rate only the consistent set has one
        assert solve_E3(baseline)[0].conditions["classic_cubic_same_root_count"]
        assert not solve_E3(formal_free_root)[0].conditions["classic_cubic_same_root_count"]

    def test_roots_match_grid_sign_scan(self, formal_free_root):
        for p in (Params(**BASELINE), formal_free_root, Params(**{**BASELINE, "d": 6.0})):
            coeffs = consistent_cubic_coefficients(p)

            def poly(x):
                return ((x + coeffs.l1) * x + coeffs.l2) * x + coeffs.l3

            xs = np.linspace(0.0, p.K, 10_001)[1:-1]
            values = poly(xs)
            scanned = []
            for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
                lo, hi = xs[i], xs[i + 1]
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if poly(lo) * poly(mid) <= 0:
                        hi = mid
                    else:
                        lo = mid
                scanned.append(0.5 * (lo + hi))
            scanned = [x for x in scanned if formal_free_revenue(p, x) > 0]
            analytic = sorted(r.point[0] for r in solve_E3(p) if r.feasible)
            assert len(scanned) == len(analytic)
            for got, want in zip(sorted(scanned), analytic):
                assert got == pytest.approx(want, abs=1e-6 * max(1.0, want))


class TestCoexistence:
    def test_baseline_interior_point(self, baseline):
        reports = solve_coexistence(baseline)
        assert len(reports) == 1
        rep = reports[0]
        assert rep.class_label == CLASS_COEXISTENCE
        assert np.all(rep.point > 1e-8)
        assert rep.residual_norm <= 1e-9

    def test_deterministic_across_seeds_and_start_counts(self, baseline):
        base = solve_coexistence(baseline, n_starts=64)
        for variant in (solve_coexistence(baseline, n_starts=64, seed=123),
                        solve_coexistence(baseline, n_starts=64, seed=9),
                        solve_coexistence(baseline, n_starts=128)):
            assert len(variant) == len(base)
            for got, want in zip(variant, base):
                scale = max(1.0, float(np.max(np.abs(want.point))))
                assert np.max(np.abs(got.point - want.point)) <= 1e-6 * scale

    def test_every_report_interior_with_tiny_residual(self):
        rng = np.random.default_rng(63)
        for _ in range(10):
            p = random_params(rng)
            for rep in solve_coexistence(p, n_starts=27):
                assert np.all(rep.point > 1e-8)
                assert rep.residual_norm <= 1e-9

    def test_boundary_newton_points_match_known_equilibria(self):
        # every converged start that lands on a coordinate plane of the
        # nonnegative octant must be one of the closed-form or formal-free
        # equilibria (off-octant stationary points, e.g. the fbar = 0
        # family with g = -sigma/gamma, are outside the classification)
        rng = np.random.default_rng(42)
        for _ in range(20):
            p = random_params(rng)
            candidates = [r.point for r in closed_form_equilibria(p) if r.point is not None]
            coeffs = consistent_cubic_coefficients(p)
            for x in real_cubic_roots(coeffs.l1, coeffs.l2, coeffs.l3):
                if x > -p.a:
                    candidates.append(np.array([x, 0.0, formal_free_revenue(p, x)]))
            for start in _start_lattice(p, 64):
                point = newton_equilibrium(p, start)
                if point is None or not np.any(np.abs(point) <= 1e-8):
                    continue
                if np.any(point < -1e-8):
                    continue
                scale = max(1.0, float(np.max(np.abs(point))))
                assert any(np.max(np.abs(point - c)) <= 1e-6 * scale for c in candidates), \
                    f"unmatched boundary point {point}"


def test_solve_E3_without_saturating_channel():
    p = Params(**{**BASELINE, "beta": 0.0})
    reports = solve_E3(p)
    assert len(reports) == 1
    rep = reports[0]
    assert not rep.feasible
    assert "beta zero" in rep.reason
    assert np.array_equal(rep.point, [0.0, 0.0, (p.d - p.mu) / p.delta])


def test_residual_invariant_over_random_parameters():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        p = random_params(rng)
        for rep in all_equilibria(p, n_starts=27):
            if rep.point is None:
                continue
            scale = 1.0 + float(np.max(np.abs(rep.point)))
            assert rep.residual_norm <= 1e-9 * scale, rep.class_label


def test_all_equilibria_report_shape(baseline):
    reports = all_equilibria(baseline)
    labels = [r.class_label for r in reports]
    for expected in (CLASS_TRIVIAL, CLASS_BOUNDARY, CLASS_FIRM_FREE,
                     CLASS_GOVERNMENT_FREE, CLASS_FORMAL_FREE, CLASS_COEXISTENCE):
        assert expected in labels
    for rep in reports:
        doc = rep.to_dict()
        assert set(doc) == {"point", "class", "feasible", "conditions", "residual"}
