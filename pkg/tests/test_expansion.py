import numpy as np
import pytest
from numpy.testing import assert_allclose

from hawking_lab.errors import FitUnstable, RadiusOutOfRange
from hawking_lab.expansion import (
    bartnik_lower_bound,
    compare_report,
    fit_coefficients,
    ladder_to_csv,
    predicted_coefficients,
    radius_ladder,
    willmore_expansion_check,
)
from hawking_lab.geodesics import GeodesicConfig
from hawking_lab.manifold import (
    ConformalMetric,
    EuclideanMetric,
    HyperbolicMetric,
    RoundSphereMetric,
    SchwarzschildMetric,
    curvature_packet,
)
from hawking_lab.surface import build_grid

S2_NORM = 6.0 / 4.0**6  # traceless-Ricci norm of the m=1 slice at r=4


@pytest.fixture(scope="module")
def grid():
    return build_grid(48, 96)


@pytest.fixture(scope="module")
def cfg():
    return GeodesicConfig(rel_tol=1e-12, abs_tol=1e-14)


@pytest.fixture(scope="module")
def schwarzschild_ladders(grid, cfg):
    metric = SchwarzschildMetric(1.0)
    p = np.array([4.0, 0.0, 0.0])
    opt = radius_ladder(metric, p, "optimal", 0.8, 6, grid, cfg=cfg)
    unp = radius_ladder(metric, p, "unperturbed", 0.8, 6, grid, cfg=cfg)
    return opt, unp


class TestFit:
    def test_exact_model_recovery(self):
        radii = 0.4 * 0.5 ** np.arange(6)
        values = 0.5 * radii**3 - 0.25 * radii**5
        fit = fit_coefficients(radii, values)
        assert abs(fit.c3 - 0.5) < 1e-10
        assert abs(fit.c5 + 0.25) < 1e-10

    def test_nuisance_absorption(self):
        radii = 0.4 * 0.5 ** np.arange(6)
        values = 0.5 * radii**3 - 0.25 * radii**5 + 0.1 * radii**6
        fit = fit_coefficients(radii, values)
        assert abs(fit.c3 - 0.5) < 1e-9
        assert abs(fit.c5 + 0.25) < 1e-9
        assert abs(fit.c6 - 0.1) < 1e-7

    def test_ladder_validation(self):
        with pytest.raises(ValueError):
            fit_coefficients(np.array([0.4, 0.2, 0.1]), np.zeros(3))
        increasing = np.array([0.1, 0.2, 0.4, 0.8, 1.6])
        with pytest.raises(ValueError):
            fit_coefficients(increasing, np.zeros(5))
        non_geometric = np.array([0.4, 0.2, 0.1, 0.06, 0.01])
        with pytest.raises(ValueError):
            fit_coefficients(non_geometric, np.zeros(5))

    def test_condition_limit(self):
        radii = 0.4 * 0.5 ** np.arange(6)
        values = radii**3
        with pytest.raises(FitUnstable):
            fit_coefficients(radii, values, condition_limit=1.0)

    def test_nonfinite_rejected(self):
        radii = 0.4 * 0.5 ** np.arange(5)
        values = radii**3
        values[2] = np.nan
        with pytest.raises(ValueError):
            fit_coefficients(radii, values)


class TestPredicted:
    def test_flat_zero(self):
        packet = curvature_packet(EuclideanMetric(), np.zeros(3))
        pred = predicted_coefficients(packet, "optimal")
        assert pred.c3 == 0.0 and abs(pred.c5) < 1e-12

    def test_round_sphere_values(self):
        packet = curvature_packet(RoundSphereMetric(), np.array([0.1, 0.0, 0.0]))
        pred = predicted_coefficients(packet, "optimal")
        assert abs(pred.c3 - 0.5) < 1e-9
        assert abs(pred.c5 + 0.25) < 1e-8
        assert abs(pred.willmore_quadratic + 16.0 * np.pi) < 1e-7
        assert abs(pred.area_quadratic + 1.0 / 3.0) < 1e-10

    def test_unperturbed_drops_traceless_term(self):
        packet = curvature_packet(SchwarzschildMetric(1.0), np.array([4.0, 0.0, 0.0]))
        pred_o = predicted_coefficients(packet, "optimal")
        pred_u = predicted_coefficients(packet, "unperturbed")
        assert abs((pred_o.c5 - pred_u.c5) - packet.traceless_norm_sq / 90.0) < 1e-12
        assert pred_o.c3 == pred_u.c3

    def test_generalized_space_forms_annihilate(self):
        # Sc = 6K and S = 0 kill both leading coefficients
        for metric, K in ((HyperbolicMetric(), -1), (RoundSphereMetric(), 1)):
            packet = curvature_packet(metric, np.array([0.05, 0.1, 0.0]))
            pred = predicted_coefficients(packet, "generalized", K)
            assert abs(pred.c3) < 1e-10
            assert abs(pred.c5) < 1e-9

    def test_invalid_mode(self):
        packet = curvature_packet(EuclideanMetric(), np.zeros(3))
        with pytest.raises(ValueError):
            predicted_coefficients(packet, "bogus")


class TestLadder:
    def test_flat_both_modes_zero(self, cfg):
        grid = build_grid(32, 64)
        for mode in ("optimal", "unperturbed"):
            ladder = radius_ladder(
                EuclideanMetric(), np.zeros(3), mode, 0.2, 6, grid, cfg=cfg
            )
            assert np.max(np.abs(ladder.masses)) < 1e-10

    def test_round_sphere_leading_order(self, grid, cfg):
        ladder = radius_ladder(
            RoundSphereMetric(), np.array([0.1, 0.05, -0.03]), "optimal", 0.2, 6,
            grid, cfg=cfg,
        )
        assert np.all(np.diff(ladder.masses) < 0.0)  # decreasing with rho
        leading = 0.5 * ladder.radii**3
        assert np.max(np.abs(ladder.masses / leading - 1.0)) < 0.05

    def test_schwarzschild_positive_quintic(self, schwarzschild_ladders):
        opt, _ = schwarzschild_ladders
        assert np.all(opt.masses > 0.0)
        ratio = opt.masses / (S2_NORM / 90.0 * opt.radii**5)
        assert np.max(np.abs(ratio - 1.0)) < 0.05

    def test_injectivity_guard(self, grid, cfg):
        with pytest.raises(RadiusOutOfRange):
            radius_ladder(
                RoundSphereMetric(), np.zeros(3), "optimal", 3.0, 6, grid, cfg=cfg
            )

    def test_mode_validation(self, grid, cfg):
        with pytest.raises(ValueError):
            radius_ladder(EuclideanMetric(), np.zeros(3), "blah", 0.2, 6, grid, cfg=cfg)
        with pytest.raises(ValueError):
            radius_ladder(EuclideanMetric(), np.zeros(3), "optimal", 0.2, 3, grid, cfg=cfg)


class TestEndToEnd:
    def test_round_sphere_coefficients(self, grid, cfg):
        ladder = radius_ladder(
            RoundSphereMetric(), np.array([0.1, 0.05, -0.03]), "optimal", 0.4, 6,
            grid, cfg=cfg,
        )
        fit = fit_coefficients(ladder.radii, ladder.masses)
        pred = predicted_coefficients(ladder.packet, "optimal")
        report = compare_report(fit, pred, c3_rel=0.01, c5_rel=0.05)
        assert report.passed

    def test_schwarzschild_traceless_isolation(self, schwarzschild_ladders):
        opt, unp = schwarzschild_ladders
        fit_o = fit_coefficients(opt.radii, opt.masses)
        fit_u = fit_coefficients(unp.radii, unp.masses)
        assert abs(fit_o.c3) < 2e-3
        assert abs(fit_o.c5 - S2_NORM / 90.0) < 0.1 * S2_NORM / 90.0
        diff = fit_o.c5 - fit_u.c5
        assert abs(diff - S2_NORM / 90.0) < 0.1 * S2_NORM / 90.0

    def test_fit_stability_under_rho0_halving(self, grid, cfg, schwarzschild_ladders):
        opt, _ = schwarzschild_ladders
        fit_a = fit_coefficients(opt.radii, opt.masses)
        metric = SchwarzschildMetric(1.0)
        ladder_b = radius_ladder(
            metric, np.array([4.0, 0.0, 0.0]), "optimal", 0.4, 6, grid, cfg=cfg
        )
        fit_b = fit_coefficients(ladder_b.radii, ladder_b.masses)
        assert abs(fit_b.c5 - fit_a.c5) < 0.05 * abs(fit_a.c5)
        # c3 vanishes here; stability is absolute, at the scale of c5 rho^2
        assert abs(fit_b.c3 - fit_a.c3) < 0.01 * abs(fit_a.c5)

    def test_rigidity_direction(self, grid, cfg):
        # positive masses at every small radius on the non-flat fixtures
        for metric, p, rho0 in (
            (RoundSphereMetric(), np.array([0.1, 0.0, 0.0]), 0.2),
            (SchwarzschildMetric(1.0), np.array([4.0, 0.0, 0.0]), 0.8),
        ):
            ladder = radius_ladder(metric, p, "optimal", rho0, 6, grid, cfg=cfg)
            assert np.all(ladder.masses > 0.0)

    def test_generalized_rigidity_space_forms(self, grid, cfg):
        for metric, K in ((HyperbolicMetric(), -1), (RoundSphereMetric(), 1)):
            ladder = radius_ladder(
                metric, np.array([0.05, 0.02, 0.0]), "optimal", 0.4, 6, grid,
                K=K, cfg=cfg,
            )
            fit = fit_coefficients(ladder.radii, ladder.masses)
            assert abs(fit.c3) <= 1e-3


class TestWillmoreExpansion:
    def test_flat_all_zero(self, cfg):
        grid = build_grid(32, 64)
        ladder = radius_ladder(EuclideanMetric(), np.zeros(3), "optimal", 0.2, 6, grid, cfg=cfg)
        report = willmore_expansion_check(ladder)
        assert abs(report.willmore_quadratic) < 1e-8
        assert abs(report.area_quadratic) < 1e-8

    def test_round_sphere_quadratic(self, grid, cfg):
        ladder = radius_ladder(
            RoundSphereMetric(), np.array([0.1, 0.0, 0.0]), "optimal", 0.4, 6, grid, cfg=cfg
        )
        report = willmore_expansion_check(ladder)
        assert abs(report.willmore_quadratic + 16.0 * np.pi) < 0.01 * 16.0 * np.pi
        assert abs(report.area_quadratic + 1.0 / 3.0) < 0.02 / 3.0

    def test_schwarzschild_quartic(self, schwarzschild_ladders):
        opt, _ = schwarzschild_ladders
        report = willmore_expansion_check(opt)
        expected = -(16.0 * np.pi / 45.0) * S2_NORM
        assert abs(report.willmore_quartic - expected) < 0.1 * abs(expected)

    def test_requires_optimal_mode(self, schwarzschild_ladders):
        _, unp = schwarzschild_ladders
        with pytest.raises(ValueError):
            willmore_expansion_check(unp)


class TestBartnik:
    def test_flat_zero(self):
        packet = curvature_packet(EuclideanMetric(), np.zeros(3))
        bound = bartnik_lower_bound(packet, 0.1, 1.0)
        assert bound.bound == 0.0

    def test_positive_scalar_fixture(self):
        # conformal factor with Sc = 2 at the origin
        metric = ConformalMetric.from_polynomial([(-0.25, (2, 0, 0))])
        packet = curvature_packet(metric, np.zeros(3))
        assert abs(packet.scalar - 2.0) < 1e-9
        bound = bartnik_lower_bound(packet, 0.1, 1.0)
        assert abs(bound.cubic_term - 2.0 / 12.0 * 1e-3) < 1e-12
        assert bound.remainder_dropped

    def test_schwarzschild_quintic_term(self):
        packet = curvature_packet(SchwarzschildMetric(1.0), np.array([4.0, 0.0, 0.0]))
        bound = bartnik_lower_bound(packet, 0.1, 1.0)
        assert abs(bound.quintic_term - S2_NORM * 1e-5 / 90.0) < 1e-12
        assert bound.bound > 0.0

    def test_radius_guard(self):
        packet = curvature_packet(EuclideanMetric(), np.zeros(3))
        with pytest.raises(RadiusOutOfRange):
            bartnik_lower_bound(packet, 0.6, 1.0)
        with pytest.raises(RadiusOutOfRange):
            bartnik_lower_bound(packet, -0.1, 1.0)


class TestLadderCsv:
    def test_deterministic_output(self, cfg, tmp_path):
        grid = build_grid(32, 64)
        ladder = radius_ladder(
            RoundSphereMetric(), np.array([0.1, 0.0, 0.0]), "optimal", 0.2, 5, grid, cfg=cfg
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        ladder_to_csv(ladder, p1)
        ladder_to_csv(ladder, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text().splitlines()[0] == "rho,area,willmore,hawking,predicted_leading"
