import math

import numpy as np
import pytest

from markgof import (
    BoundaryCoxConfig,
    Grain,
    Window,
    ellipse_boundary_sampler,
    make_bins,
    sample_germs,
    sample_grains,
    simulate_pattern,
    thin_covered,
    window_for_expected_points,
)
from markgof.chi2 import chi2_quantile
from markgof.seeding import derive_seed

from oracles import ellipse_perimeter_oracle


class TestConfig:
    def test_zero_intensity_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCoxConfig(germ_intensity=0.0)

    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCoxConfig(germ_intensity=1e-4, boundary_intensity=-0.1)
        with pytest.raises(ValueError):
            BoundaryCoxConfig(germ_intensity=1e-4, radius_scale=0.0)

    def test_elongation_below_one_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCoxConfig(germ_intensity=1e-4, elongation=0.9)

    def test_margin_quantile_bounds(self):
        with pytest.raises(ValueError):
            BoundaryCoxConfig(germ_intensity=1e-4, margin_quantile=1.0)

    def test_margin_is_elongation_scaled_gamma_quantile(self, boolean_config):
        m1 = boolean_config.margin()
        m2 = boolean_config.with_elongation(1.325).margin()
        assert m2 == pytest.approx(1.325 * m1, rel=1e-12)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            BoundaryCoxConfig.from_dict({"germ_intensity": 1e-4, "bogus": 1})

    def test_dict_roundtrip(self, boolean_config):
        assert BoundaryCoxConfig.from_dict(boolean_config.to_dict()) == boolean_config


class TestGerms:
    def test_expected_count(self):
        w = Window.square(1000.0)
        counts = [
            len(sample_germs(w, 0.0, 1.5e-4, np.random.default_rng(derive_seed(1, i))))
            for i in range(80)
        ]
        mean = np.mean(counts)
        # Poisson(150): 3 sigma over 80 replications
        assert abs(mean - 150.0) <= 3.0 * math.sqrt(150.0 / 80)

    def test_margin_expands_region(self):
        w = Window.square(100.0)
        rng = np.random.default_rng(3)
        germs = sample_germs(w, 50.0, 5e-3, rng)
        assert germs[:, 0].min() < 0.0
        assert germs[:, 0].max() > 100.0

    def test_zero_intensity_rejected(self):
        with pytest.raises(ValueError):
            sample_germs(Window.square(10.0), 0.0, 0.0, np.random.default_rng(0))

    def test_determinism(self):
        w = Window.square(500.0)
        a = sample_germs(w, 10.0, 1e-3, np.random.default_rng(42))
        b = sample_germs(w, 10.0, 1e-3, np.random.default_rng(42))
        assert np.array_equal(a, b)


class TestGrains:
    def test_gamma_radius_mean(self, boolean_config):
        rng = np.random.default_rng(7)
        germs = np.zeros((4000, 2))
        grains = sample_grains(germs, boolean_config, rng)
        radii = np.array([g.b for g in grains])
        # mean 40.5, sd 13.5: 4 sigma band over 4000 draws
        assert abs(radii.mean() - 40.5) <= 4.0 * 13.5 / math.sqrt(4000)

    def test_disc_case(self, boolean_config):
        rng = np.random.default_rng(8)
        grains = sample_grains(np.zeros((50, 2)), boolean_config, rng)
        assert all(g.a == g.b for g in grains)

    def test_elongation_exact_ratio(self, boolean_config):
        cfg = boolean_config.with_elongation(1.325)
        grains = sample_grains(np.zeros((50, 2)), cfg, np.random.default_rng(9))
        for g in grains:
            assert g.a == pytest.approx(1.325 * g.b, rel=1e-15)

    def test_invalid_grain_rejected(self):
        with pytest.raises(ValueError):
            Grain(center=(0.0, 0.0), a=1.0, b=2.0)
        with pytest.raises(ValueError):
            Grain(center=(0.0, 0.0), a=1.0, b=0.0)


class TestBoundarySampler:
    def test_circle_perimeter_and_normals(self):
        grain = Grain(center=(3.0, -2.0), a=5.0, b=5.0)
        rng = np.random.default_rng(11)
        pts, normals = ellipse_boundary_sampler(grain, 2.0, rng)
        assert pts.shape[0] > 0
        radial = (pts - np.array(grain.center)) / 5.0
        assert np.abs(radial - normals).max() < 1e-9
        assert np.abs(np.hypot(*(pts - np.array(grain.center)).T) - 5.0).max() < 1e-9

    def test_ellipse_perimeter_vs_simpson_oracle(self):
        from markgof.simulate import _unit_arc_table

        for ce in (1.0, 1.135, 1.325, 2.0):
            _, _, total = _unit_arc_table(ce)
            assert total == pytest.approx(ellipse_perimeter_oracle(ce, 1.0), rel=1e-9)

    def test_two_to_one_ellipse_perimeter_value(self):
        # quadrature oracle pins the classic a=2, b=1 value
        assert ellipse_perimeter_oracle(2.0, 1.0) == pytest.approx(9.688448, abs=5e-7)

    def test_normals_match_gradient_direction(self):
        grain = Grain(center=(1.0, 2.0), a=4.0, b=2.0)
        rng = np.random.default_rng(12)
        pts, normals = ellipse_boundary_sampler(grain, 3.0, rng)
        gx = (pts[:, 0] - 1.0) / 4.0**2
        gy = (pts[:, 1] - 2.0) / 2.0**2
        norm = np.hypot(gx, gy)
        assert np.abs(np.column_stack((gx / norm, gy / norm)) - normals).max() < 1e-9

    def test_major_axis_point_has_horizontal_normal(self):
        # the gradient (x/a^2, y/b^2) at (a, 0) normalizes to (1, 0)
        a, b = 4.0, 2.0
        gx, gy = a / a**2, 0.0 / b**2
        norm = math.hypot(gx, gy)
        assert (gx / norm, gy / norm) == (1.0, 0.0)

    def test_poisson_mean_matches_perimeter(self):
        grain = Grain(center=(0.0, 0.0), a=10.0, b=10.0)
        counts = [
            ellipse_boundary_sampler(grain, 0.5, np.random.default_rng(derive_seed(2, i)))[0].shape[0]
            for i in range(200)
        ]
        expected = 0.5 * 2 * math.pi * 10.0
        assert abs(np.mean(counts) - expected) <= 3.0 * math.sqrt(expected / 200)


class TestThinning:
    def test_single_grain_keeps_all(self):
        grains = [Grain(center=(0.0, 0.0), a=2.0, b=1.0)]
        rng = np.random.default_rng(13)
        pts, normals = ellipse_boundary_sampler(grains[0], 5.0, rng)
        gidx = np.zeros(len(pts), dtype=int)
        kept_pts, kept_normals = thin_covered(pts, normals, gidx, grains)
        assert np.array_equal(kept_pts, pts)
        assert np.array_equal(kept_normals, normals)

    def test_candidate_at_other_center_removed(self):
        grains = [
            Grain(center=(0.0, 0.0), a=1.0, b=1.0),
            Grain(center=(3.0, 0.0), a=2.0, b=2.0),
        ]
        pts = np.array([[3.0, 0.0], [0.0, 1.0]])
        normals = np.array([[1.0, 0.0], [0.0, 1.0]])
        gidx = np.array([0, 0])
        kept_pts, _ = thin_covered(pts, normals, gidx, grains)
        assert kept_pts.shape[0] == 1
        assert np.array_equal(kept_pts[0], [0.0, 1.0])

    def test_candidate_exactly_on_other_boundary_kept(self):
        grains = [
            Grain(center=(0.0, 0.0), a=1.0, b=1.0),
            Grain(center=(3.0, 0.0), a=2.0, b=2.0),
        ]
        # (1, 0) lies on grain 0's boundary and exactly on grain 1's boundary
        pts = np.array([[1.0, 0.0]])
        normals = np.array([[1.0, 0.0]])
        kept_pts, _ = thin_covered(pts, normals, np.array([0]), grains)
        assert kept_pts.shape[0] == 1


class TestSimulatePattern:
    def test_determinism(self, boolean_config):
        w = Window.square(400.0)
        a = simulate_pattern(boolean_config, w, 777)
        b = simulate_pattern(boolean_config, w, 777)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.marks, b.marks)

    def test_different_seeds_differ(self, boolean_config):
        w = Window.square(400.0)
        a = simulate_pattern(boolean_config, w, 1)
        b = simulate_pattern(boolean_config, w, 2)
        assert a.n != b.n or not np.array_equal(a.points, b.points)

    def test_points_inside_and_marks_in_range(self, boolean_config):
        w = Window(origin=(-100.0, 50.0), sides=(300.0, 200.0))
        pat = simulate_pattern(boolean_config, w, 31)
        assert pat.n > 0
        assert w.contains(pat.points).all()
        assert pat.marks.min() >= 0.0
        assert pat.marks.max() < math.pi

    def test_no_point_interior_to_any_grain(self, boolean_config):
        w = Window.square(300.0)
        seed = 97
        pat = simulate_pattern(boolean_config, w, seed)
        # regenerate the grain configuration: same seed, same draw order
        rng = np.random.default_rng(seed)
        germs = sample_germs(w, boolean_config.margin(), boolean_config.germ_intensity, rng)
        grains = sample_grains(germs, boolean_config, rng)
        assert pat.n > 0
        for grain in grains:
            dx = (pat.points[:, 0] - grain.center[0]) / grain.a
            dy = (pat.points[:, 1] - grain.center[1]) / grain.b
            assert np.all(dx * dx + dy * dy >= 1.0 - 1e-9)

    def test_mean_count_hits_target_3000(self, boolean_config):
        w = window_for_expected_points(boolean_config, 3000)
        counts = [
            simulate_pattern(boolean_config, w, derive_seed(11, i)).n for i in range(200)
        ]
        assert abs(np.mean(counts) / 3000.0 - 1.0) <= 0.02

    def test_disc_marks_uniform_over_nine_slices(self, boolean_config):
        # full partition into 9 slices of width pi/9; chi-square uniformity
        # on marks pooled over 100 replications must not reject at 0.1%
        w = window_for_expected_points(boolean_config, 600)
        width = math.pi / 9.0
        pooled = np.zeros(9)
        for i in range(100):
            pat = simulate_pattern(boolean_config, w, derive_seed(13, i))
            idx = np.minimum((pat.marks // width).astype(int), 8)
            pooled += np.bincount(idx, minlength=9)
        expected = pooled.sum() / 9.0
        stat = ((pooled - expected) ** 2 / expected).sum()
        assert stat < chi2_quantile(0.999, 8)

    def test_disc_palm_distribution_close_to_uniform(self, boolean_config):
        bins = make_bins(8)
        w = window_for_expected_points(boolean_config, 600)
        pooled = np.zeros(8)
        total = 0
        for i in range(100):
            pat = simulate_pattern(boolean_config, w, derive_seed(13, i))
            pooled += bins.counts(pat.marks)
            total += pat.n
        frac = pooled / total
        p = 1.0 / 9.0
        se = math.sqrt(p * (1 - p) / total)
        assert np.abs(frac - p).max() <= 3.0 * se

    def test_elongation_tilts_marks_to_vertical(self, boolean_config):
        # wide ellipses expose more boundary with near-vertical normals
        cfg = boolean_config.with_elongation(1.325)
        bins = make_bins(8)
        w = window_for_expected_points(boolean_config, 600)
        pooled = np.zeros(8)
        for i in range(100):
            pat = simulate_pattern(cfg, w, derive_seed(14, i))
            pooled += bins.counts(pat.marks)
        vertical = pooled[4]  # [80, 100) degrees
        horizontal = pooled[0]  # [0, 20) degrees
        assert vertical > horizontal * 1.5
