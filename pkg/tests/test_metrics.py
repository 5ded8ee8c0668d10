import math

import numpy as np
import pytest

from rampinn import (
    BadWindow,
    EmptyInput,
    LengthMismatch,
    Peak,
    PeakMatchReport,
    PeakParams,
    Spectrum,
    WavenumberGrid,
    aggregate,
    default_grid,
    find_peaks,
    match_peaks,
    mse,
    psnr,
    savitzky_golay,
    score_pair,
)
from rampinn.metrics import brute_force_match
from conftest import lorentzian_parts


def spectrum(values, grid=None):
    values = np.asarray(values, dtype=np.float64)
    return Spectrum(grid or default_grid(len(values)), values)


def peak_at(pos, amp=1.0):
    return Peak(position=pos, amplitude=amp, prominence=amp, index=int(round(pos * 999)))


class TestMsePsnr:
    def test_identical(self, grid1000):
        s = spectrum(np.linspace(0, 1, 1000))
        assert mse(s, s) == 0.0
        assert psnr(s, s) == math.inf

    def test_constant_offset(self):
        a = spectrum(np.full(100, 0.5))
        b = spectrum(np.full(100, 0.6))
        assert mse(a, b) == pytest.approx(0.01)
        assert psnr(a, b) == pytest.approx(20.0)

    def test_published_example_magnitude(self):
        # a per-sample MSE of 6e-4 maps to ~32.2 dB under peak value 1
        assert 10 * math.log10(1 / 0.0006) == pytest.approx(32.22, abs=0.01)

    def test_grid_mismatch(self):
        with pytest.raises(LengthMismatch):
            mse(spectrum(np.zeros(10)), spectrum(np.zeros(12)))


class TestSavitzkyGolay:
    def test_polynomial_reproduced_exactly(self):
        x = default_grid(200).points
        values = 0.3 + 1.2 * x - 0.8 * x**2 + 0.5 * x**3
        out = savitzky_golay(spectrum(values), window=11, polyorder=3)
        np.testing.assert_allclose(out.values[10:-10], values[10:-10], atol=1e-12)

    def test_window_one_is_identity(self):
        s = spectrum(np.random.default_rng(0).uniform(0, 1, 50))
        out = savitzky_golay(s, window=1, polyorder=3)
        np.testing.assert_array_equal(out.values, s.values)

    def test_bad_window(self):
        s = spectrum(np.zeros(50))
        with pytest.raises(BadWindow):
            savitzky_golay(s, window=4, polyorder=3)
        with pytest.raises(BadWindow):
            savitzky_golay(s, window=3, polyorder=3)
        with pytest.raises(BadWindow):
            savitzky_golay(s, window=51, polyorder=3)

    def test_noise_variance_reduced(self):
        reductions = []
        for seed in range(100):
            noise = np.random.default_rng(seed).standard_normal(500)
            out = savitzky_golay(spectrum(noise), 11, 3).values
            reductions.append(np.var(noise[20:-20]) / np.var(out[20:-20]))
        assert np.mean(np.asarray(reductions) >= 2.0) == 1.0


class TestFindPeaks:
    def test_single_triangle(self):
        values = np.concatenate([np.linspace(0, 1, 51), np.linspace(1, 0, 51)[1:]])
        peaks = find_peaks(spectrum(values), PeakParams(smooth_window=1))
        assert len(peaks) == 1
        assert peaks[0].index == 50
        assert peaks[0].prominence == pytest.approx(1.0)

    def test_two_close_equal_peaks_keep_lower_index(self):
        values = np.zeros(1000)
        values[300] = 1.0
        values[305] = 1.0
        peaks = find_peaks(spectrum(values), PeakParams(smooth_window=1))
        assert [p.index for p in peaks] == [300]

    def test_separated_peaks_survive(self):
        values = np.zeros(1000)
        values[300] = 1.0
        values[320] = 0.9
        peaks = find_peaks(spectrum(values), PeakParams(smooth_window=1))
        assert [p.index for p in peaks] == [300, 320]

    def test_height_filter_applies_before_distance(self):
        values = np.zeros(1000)
        values[100] = 0.5
        values[104] = 0.01  # below default prominence threshold
        peaks = find_peaks(spectrum(values), PeakParams(smooth_window=1))
        assert [p.index for p in peaks] == [100]

    def test_clean_lorentzian_spectrum_detection(self, grid1000):
        # construct well-separated resolved peaks; every qualifying center
        # must be recovered within the matching tolerance
        rng = np.random.default_rng(17)
        params = PeakParams()
        centers = np.linspace(0.06, 0.94, 23) + rng.uniform(-0.01, 0.01, 23)
        amps = rng.uniform(0.15, 1.0, 23)
        widths = rng.uniform(0.004, 0.015, 23)
        total = np.zeros(1000)
        for c, a, w in zip(centers, amps, widths):
            total += lorentzian_parts(grid1000.points, a, c, w)[1]
        raman = spectrum(total / total.max())
        peaks = find_peaks(raman, params)
        for c in centers:
            assert any(abs(p.position - c) <= params.match_tol for p in peaks)

    def test_translation_equivariance_interior(self):
        rng = np.random.default_rng(3)
        base = np.zeros(1000)
        for c in (0.3, 0.5, 0.72):
            base += np.exp(-0.5 * ((default_grid(1000).points - c) / 0.01) ** 2)
        base /= base.max()
        shift = 40
        shifted = np.roll(base, shift)
        p0 = find_peaks(spectrum(base), PeakParams())
        p1 = find_peaks(spectrum(shifted), PeakParams())
        pos0 = sorted(p.index for p in p0)
        pos1 = sorted(p.index for p in p1)
        assert [i + shift for i in pos0] == pos1


class TestMatching:
    def test_identical_lists(self):
        peaks = [peak_at(0.2, 0.5), peak_at(0.6, 1.0)]
        report = match_peaks(peaks, peaks, 0.01)
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.f1 == 1.0
        assert report.mle_norm == 0.0
        assert report.rie_mean() == 0.0

    def test_empty_prediction(self):
        report = match_peaks([], [peak_at(0.4)], 0.01)
        assert report.recall == 0.0
        assert report.f1 == 0.0
        assert math.isnan(report.precision)
        assert math.isnan(report.mle_norm)

    def test_never_matches_beyond_tolerance(self):
        report = match_peaks([peak_at(0.2)], [peak_at(0.25)], 0.01)
        assert report.tp == 0
        report = match_peaks([peak_at(0.2)], [peak_at(0.209)], 0.01)
        assert report.tp == 1

    def test_ambiguous_instance_matches_bruteforce(self):
        pred = [peak_at(0.300), peak_at(0.306), peak_at(0.8)]
        truth = [peak_at(0.303), peak_at(0.31)]
        report = match_peaks(pred, truth, 0.01)
        count, total = brute_force_match(
            [p.position for p in pred], [t.position for t in truth], 0.01
        )
        assert report.tp == count
        assert sum(report.location_errors) == pytest.approx(total, abs=1e-12)

    def test_greedy_equals_bruteforce_on_random_instances(self):
        rng = np.random.default_rng(0)
        tol = 0.01
        for _ in range(1000):
            n_pred, n_truth = rng.integers(0, 7), rng.integers(0, 7)
            pred = [peak_at(float(x)) for x in np.sort(rng.uniform(0, 1, n_pred))]
            truth = [peak_at(float(x)) for x in np.sort(rng.uniform(0, 1, n_truth))]
            report = match_peaks(pred, truth, tol)
            count, total = brute_force_match(
                [p.position for p in pred], [t.position for t in truth], tol
            )
            assert report.tp == count
            assert sum(report.location_errors) == pytest.approx(total, abs=1e-12)

    def test_intensity_error_floor(self):
        pred = [peak_at(0.5, 0.5)]
        truth = [Peak(position=0.5, amplitude=0.0, prominence=0.0, index=500)]
        report = match_peaks(pred, truth, 0.01, floor=1e-8)
        assert report.rie_mean(1e-8) == pytest.approx(0.5 / 1e-8)


class TestAggregate:
    def test_single_report(self):
        r = match_peaks([peak_at(0.2)], [peak_at(0.2)], 0.01)
        summary = aggregate([r])
        assert summary.macro["f1"] == (1.0, 0.0)
        assert summary.micro["f1"] == 1.0

    def test_micro_from_pooled_counts(self):
        r1 = PeakMatchReport(tp=1, fp=0, fn=0)
        r2 = PeakMatchReport(tp=0, fp=1, fn=1)
        summary = aggregate([r1, r2])
        assert summary.micro["precision"] == pytest.approx(0.5)
        assert summary.micro["recall"] == pytest.approx(0.5)
        assert summary.micro["f1"] == pytest.approx(0.5)

    def test_all_nan_location_errors_stay_nan(self):
        r1 = PeakMatchReport(tp=0, fp=1, fn=1)
        r2 = PeakMatchReport(tp=0, fp=0, fn=2)
        summary = aggregate([r1, r2])
        assert math.isnan(summary.macro["mle_norm"][0])
        assert math.isnan(summary.pooled_rie_mean)

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            aggregate([])

    def test_micro_equals_macro_for_identical_counts(self):
        reports = [PeakMatchReport(tp=2, fp=1, fn=1) for _ in range(5)]
        summary = aggregate(reports)
        assert summary.micro["f1"] == pytest.approx(summary.macro["f1"][0])


class TestScalingInvariance:
    def test_metrics_invariant_to_prenormalization_scale(self, grid1000):
        rng = np.random.default_rng(5)
        centers = [0.25, 0.5, 0.75]
        base = np.zeros(1000)
        for c in centers:
            base += np.exp(-0.5 * ((grid1000.points - c) / 0.008) ** 2)
        noisyish = base + 0.02 * rng.standard_normal(1000)
        truth = base / base.max()
        for scale in (1.0, 7.3):
            pred_raw = noisyish * scale
            pred = pred_raw / pred_raw.max()
            s = score_pair(spectrum(pred), spectrum(truth))
            if scale == 1.0:
                reference = s
            else:
                assert s.mse == pytest.approx(reference.mse, rel=1e-9)
                assert s.report.tp == reference.report.tp
