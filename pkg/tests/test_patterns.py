import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from markgof import (
    MarkedPointPattern,
    NullMarkDistribution,
    Window,
    fold_direction,
    make_bins,
)

unit_angle = st.floats(0.0, 2.0 * math.pi, exclude_max=True)


class TestMarkBins:
    def test_width_is_twenty_degrees_for_eight_bins(self):
        bins = make_bins(8)
        assert bins.width == pytest.approx(math.pi / 9, rel=1e-15)
        assert math.degrees(bins.width) == pytest.approx(20.0, rel=1e-12)

    def test_single_bin(self):
        bins = make_bins(1)
        lo, hi = bins.interval(0)
        assert lo == 0.0
        assert hi == pytest.approx(math.pi / 2, rel=1e-15)

    def test_third_bin_is_40_to_60_degrees(self):
        lo, hi = make_bins(8).interval(2)
        assert math.degrees(lo) == pytest.approx(40.0, rel=1e-12)
        assert math.degrees(hi) == pytest.approx(60.0, rel=1e-12)

    def test_zero_bins_rejected(self):
        with pytest.raises(ValueError):
            make_bins(0)

    def test_bin_index_examples(self):
        bins = make_bins(8)
        assert bins.bin_index(0.0) == 0
        assert bins.bin_index(math.radians(170.0)) is None
        assert bins.bin_index(math.radians(59.9)) == 2

    def test_left_endpoints_belong_to_their_bin(self):
        bins = make_bins(8)
        for i in range(bins.ell):
            edge = float(bins.edges[i])
            assert bins.bin_index(edge) == i
            if i > 0:
                below = float(np.nextafter(edge, -1.0))
                assert bins.bin_index(below) == i - 1

    def test_uncovered_slice(self):
        bins = make_bins(8)
        assert bins.bin_index(bins.edges[-1]) is None
        assert bins.bin_index(np.nextafter(math.pi, 0.0)) is None

    def test_mark_outside_range_rejected(self):
        with pytest.raises(ValueError):
            make_bins(8).bin_index(math.pi)
        with pytest.raises(ValueError):
            make_bins(8).bin_index(-0.1)

    @given(theta=st.floats(0.0, math.pi, exclude_max=True), ell=st.integers(1, 12))
    def test_exactly_one_of_bin_or_excluded(self, theta, ell):
        bins = make_bins(ell)
        idx = bins.bin_index(theta)
        hits = [
            i for i in range(ell)
            if bins.interval(i)[0] <= theta < bins.interval(i)[1]
        ]
        if idx is None:
            assert hits == []
        else:
            assert hits == [idx]

    def test_counts_match_scalar_indexing(self, rng):
        bins = make_bins(8)
        marks = rng.uniform(0, math.pi, 500)
        counts = bins.counts(marks)
        manual = np.zeros(8)
        for m in marks:
            i = bins.bin_index(m)
            if i is not None:
                manual[i] += 1
        assert np.array_equal(counts, manual)


class TestFoldDirection:
    def test_examples(self):
        assert fold_direction((1.0, 0.0)) == 0.0
        assert fold_direction((0.0, -1.0)) == pytest.approx(math.pi / 2, rel=1e-15)
        s = math.sqrt(0.5)
        assert fold_direction((-s, -s)) == pytest.approx(math.pi / 4, rel=1e-12)

    def test_non_unit_vector_rejected(self):
        with pytest.raises(ValueError):
            fold_direction((1.0, 1.0))
        with pytest.raises(ValueError):
            fold_direction((0.0, 0.0))

    @given(phi=unit_angle)
    def test_antipodal_identification(self, phi):
        v = (math.cos(phi), math.sin(phi))
        w = (-v[0], -v[1])
        a = fold_direction(v)
        b = fold_direction(w)
        assert 0.0 <= a < math.pi
        assert a == pytest.approx(b, abs=1e-9) or abs(a - b) == pytest.approx(
            math.pi, abs=1e-9
        )
        # the fold of the angle itself
        assert a == pytest.approx(phi % math.pi, abs=1e-12) or abs(
            a - phi % math.pi
        ) == pytest.approx(math.pi, abs=1e-9)


class TestNullMarkDistribution:
    def test_uniform_on_half_circle(self):
        null0 = NullMarkDistribution.uniform(make_bins(8))
        assert np.allclose(null0.probabilities, 1.0 / 9.0, rtol=0, atol=1e-15)
        assert null0.probabilities.sum() < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            NullMarkDistribution(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            NullMarkDistribution(np.array([-0.1, 0.5]))
        with pytest.raises(ValueError):
            NullMarkDistribution(np.array([]))


class TestMarkedPointPattern:
    def test_outside_points_dropped(self, rng):
        w = Window.square(1.0)
        pts = np.array([[0.5, 0.5], [1.5, 0.5], [0.2, 0.9], [-0.1, 0.5]])
        marks = np.array([0.1, 0.2, 0.3, 0.4])
        pat = MarkedPointPattern(pts, marks, w)
        assert pat.n == 2
        assert np.array_equal(pat.points, pts[[0, 2]])
        assert np.array_equal(pat.marks, marks[[0, 2]])

    def test_readback_lossless_for_in_window_points(self, rng):
        w = Window(origin=(-3.0, 2.0), sides=(7.0, 5.0))
        pts = np.column_stack((
            rng.uniform(-3, 4, 40), rng.uniform(2, 7, 40)
        ))
        marks = rng.uniform(0, math.pi, 40)
        pat = MarkedPointPattern(pts, marks, w)
        assert np.array_equal(pat.points, pts)
        assert np.array_equal(pat.marks, marks)

    def test_duplicate_points_rejected(self):
        w = Window.square(1.0)
        pts = np.array([[0.25, 0.5], [0.5, 0.5], [0.25, 0.5]])
        with pytest.raises(ValueError, match="simple"):
            MarkedPointPattern(pts, np.array([0.1, 0.2, 0.3]), w)

    def test_mark_range_enforced(self):
        w = Window.square(1.0)
        with pytest.raises(ValueError):
            MarkedPointPattern([[0.5, 0.5]], [math.pi], w)
        with pytest.raises(ValueError):
            MarkedPointPattern([[0.5, 0.5]], [-0.01], w)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            MarkedPointPattern([[0.5, 0.5]], [0.1, 0.2], Window.square(1.0))

    def test_arrays_are_frozen(self):
        pat = MarkedPointPattern([[0.5, 0.5]], [0.1], Window.square(1.0))
        with pytest.raises(ValueError):
            pat.points[0, 0] = 0.0

    def test_csv_roundtrip_bit_exact(self, rng, tmp_path):
        w = Window(origin=(-1.25, 3.5), sides=(11.0, 4.75))
        pts = np.column_stack((
            rng.uniform(-1.25, 9.75, 120), rng.uniform(3.5, 8.25, 120)
        ))
        marks = rng.uniform(0, math.pi, 120)
        pat = MarkedPointPattern(pts, marks, w)
        path = tmp_path / "pattern.csv"
        pat.to_csv(path)
        back = MarkedPointPattern.from_csv(path)
        assert back.window == pat.window
        assert np.array_equal(back.points, pat.points)
        assert np.array_equal(back.marks, pat.marks)

    def test_csv_format_header(self, tmp_path):
        pat = MarkedPointPattern([[0.5, 0.5]], [0.1], Window.square(1.0))
        path = tmp_path / "pattern.csv"
        pat.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# window_origin ")
        assert lines[1].startswith("# window_sides ")
        assert lines[2] == "x,y,theta"

    def test_csv_missing_metadata_rejected(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("x,y,theta\n0.5,0.5,0.1\n")
        with pytest.raises(ValueError, match="metadata"):
            MarkedPointPattern.from_csv(path)

    def test_empty_pattern_roundtrip(self, tmp_path):
        pat = MarkedPointPattern(np.empty((0, 2)), np.empty(0), Window.square(2.0))
        path = tmp_path / "empty.csv"
        pat.to_csv(path)
        back = MarkedPointPattern.from_csv(path)
        assert back.n == 0
        assert back.window == pat.window
