import numpy as np
import pytest

from rampinn import (
    LengthMismatch,
    NonPositiveReference,
    Spectrum,
    analytic_signal,
    classical_kk_retrieve,
    default_grid,
    hilbert_adjoint,
    hilbert_filter,
    hilbert_imag,
    kk_target,
    normalize,
)
from conftest import lorentzian_parts


def periodic_axis(n: int) -> np.ndarray:
    return np.arange(n) / n


class TestFilter:
    @pytest.mark.parametrize("n", [16, 999, 1000])
    def test_multiplier_structure(self, n):
        h = hilbert_filter(n).multiplier
        assert h[0] == 1.0
        if n % 2 == 0:
            assert h[n // 2] == 1.0
            assert np.all(h[1 : n // 2] == 2.0)
            assert np.all(h[n // 2 + 1 :] == 0.0)
        else:
            assert np.all(h[1 : (n + 1) // 2] == 2.0)
            assert np.all(h[(n + 1) // 2 :] == 0.0)


class TestAnalyticSignal:
    def test_pure_tone(self):
        t = periodic_axis(1000)
        z = analytic_signal(np.cos(2 * np.pi * 5 * t))
        assert np.max(np.abs(z.re - np.cos(2 * np.pi * 5 * t))) < 1e-10
        assert np.max(np.abs(z.im - np.sin(2 * np.pi * 5 * t))) < 1e-9

    def test_constant_has_no_conjugate_part(self):
        z = analytic_signal(np.full(256, 3.25))
        assert np.max(np.abs(z.im)) < 1e-10
        assert np.max(np.abs(z.re - 3.25)) < 1e-10

    def test_too_short(self):
        with pytest.raises(LengthMismatch):
            analytic_signal(np.array([1.0]))

    def test_narrow_lorentzian_within_stated_tolerance(self):
        # sweet band: linewidths a few grid steps wide are well resolved and
        # their lost spectral mean is ~pi*gamma, small against the tolerance
        grid = default_grid(1000).points
        re, im = lorentzian_parts(grid, 1.0, 0.5, 0.002)
        scale = np.max(np.hypot(re, im))
        err = hilbert_imag(re / scale) - im / scale
        assert np.max(np.abs(err[50:950])) < 0.02

    def test_wide_lorentzian_regression(self):
        # a peak-normalized gamma=0.02 Lorentzian loses its spectral mean
        # (~pi*gamma ~ 0.063) through the transform: no circulant operator
        # returns it, so the discrete/closed-form gap plateaus near that
        # offset.  Frozen regression of the measured interior error.
        grid = default_grid(1000).points
        re, im = lorentzian_parts(grid, 1.0, 0.5, 0.02)
        scale = np.max(np.hypot(re, im))
        err = np.abs(hilbert_imag(re / scale) - im / scale)[50:950]
        assert 0.04 < np.max(err) < 0.09

    def test_principal_value_quadrature_cross_check(self):
        # independent oracle: Cauchy PV integral of the closed-form real part
        # over a wide padded axis reproduces the closed-form imaginary part
        omega = 0.5
        amplitude, center, width = 1.0, 0.5, 0.02
        xs = np.linspace(-40, 41, 400001)
        dx = xs[1] - xs[0]
        re = amplitude * (center - xs) / ((center - xs) ** 2 + width**2)
        mask = np.abs(xs - omega) > dx / 2
        pv = np.sum(re[mask] / (omega - xs[mask])) * dx / np.pi
        im_true = amplitude * width / ((center - omega) ** 2 + width**2)
        assert abs(pv - im_true) / im_true < 1e-2


class TestOperatorAlgebra:
    def test_linearity(self):
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal((2, 500))
        a, b = 1.7, -0.4
        lhs = hilbert_imag(a * x + b * y)
        rhs = a * hilbert_imag(x) + b * hilbert_imag(y)
        assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-10

    def test_hilbert_of_hilbert_negates_ac_signal(self):
        t = periodic_axis(1000)
        x = np.sin(2 * np.pi * 7 * t)
        twice = hilbert_imag(hilbert_imag(x))
        assert np.max(np.abs(twice + x)) < 1e-8

    def test_energy_preserved_outside_dc_and_nyquist(self):
        rng = np.random.default_rng(8)
        v = rng.standard_normal(1000)
        spectrum = np.fft.fft(v)
        spectrum[0] = 0.0
        spectrum[500] = 0.0
        v = np.fft.ifft(spectrum).real
        lhs = np.sum(hilbert_imag(v) ** 2)
        rhs = np.sum(v**2)
        assert abs(lhs - rhs) / rhs < 1e-8

    @pytest.mark.parametrize("n", [16, 128, 1000])
    def test_adjoint_inner_product_identity(self, n):
        rng = np.random.default_rng(n)
        for _ in range(100 if n == 128 else 10):
            u = rng.standard_normal(n)
            v = rng.standard_normal(n)
            lhs = float(np.dot(hilbert_imag(u), v))
            rhs = float(np.dot(u, hilbert_adjoint(v)))
            scale = max(abs(lhs), abs(rhs), 1e-30)
            assert abs(lhs - rhs) / scale < 1e-9

    def test_adjoint_equals_dense_transpose(self):
        n = 16
        dense = np.zeros((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            dense[:, i] = hilbert_imag(e)
        rng = np.random.default_rng(0)
        g = rng.standard_normal(n)
        np.testing.assert_allclose(hilbert_adjoint(g), dense.T @ g, atol=1e-12)

    def test_adjoint_of_zero(self):
        np.testing.assert_array_equal(hilbert_adjoint(np.zeros(64)), np.zeros(64))


class TestKKTarget:
    def test_zero_residual(self, grid1000):
        x = Spectrum(grid1000, np.full(1000, 0.7))
        out = kk_target(x, x)
        np.testing.assert_array_equal(out.values, np.zeros(1000))

    def test_tone_plus_offset(self, grid1000):
        t = periodic_axis(1000)
        c = 0.31
        x = Spectrum(grid1000, np.cos(2 * np.pi * 5 * t) + c)
        nrb_hat = Spectrum(grid1000, np.full(1000, c))
        out = kk_target(x, nrb_hat)
        assert np.max(np.abs(out.values - np.sin(2 * np.pi * 5 * t))) < 1e-9

    def test_grid_mismatch(self, grid1000):
        with pytest.raises(LengthMismatch):
            kk_target(Spectrum(grid1000, np.zeros(1000)),
                      Spectrum(default_grid(500), np.zeros(500)))

    def test_matches_synthetic_susceptibility_pairing(self, clean_samples, grid1000):
        # pairing error on generated susceptibilities is dominated by the lost
        # spectral mean of Im plus wrap-around of dispersive tails; frozen
        # regression bounds from measuring the implemented generator
        from rampinn import sample_resonant

        errs = []
        for seed in range(50):
            rng = np.random.default_rng([404, seed])
            chi, _ = sample_resonant(rng, grid1000)
            err = hilbert_imag(chi.re) - chi.im
            errs.append(np.max(np.abs(err[50:950])))
        errs = np.array(errs)
        assert np.median(errs) < 0.25
        assert np.max(errs) < 0.6


class TestClassicalRetrieval:
    def test_equal_input_gives_zero_estimate(self, grid1000):
        values = np.linspace(0.2, 1.0, 1000)
        s = Spectrum(grid1000, values)
        out = classical_kk_retrieve(s, s)
        np.testing.assert_array_equal(out.values, np.zeros(1000))

    def test_single_lorentzian_with_exact_reference(self, grid1000):
        # benign regime of the single-pass retrieval: one resolved peak over
        # a background bounded away from zero
        grid = grid1000.points
        re, im = lorentzian_parts(grid, 1.0, 0.4, 0.01)
        scale = np.max(np.hypot(re, im))
        re, im = re / scale, im / scale
        nrb = 1 / (1 + np.exp(-8 * (grid - 0.05))) / (1 + np.exp(8 * (grid - 0.95)))
        raw = (re + nrb) ** 2 + im**2
        peak = raw.max()
        cars = Spectrum(grid1000, raw / peak, normalized=True)
        ref = Spectrum(grid1000, nrb**2 / peak)
        est = classical_kk_retrieve(cars, ref)
        truth = im / im.max()
        corr = np.corrcoef(est.values, truth)[0, 1]
        assert corr > 0.9

    def test_epsilon_flooring_keeps_output_finite(self, grid1000):
        rng = np.random.default_rng(5)
        cars = Spectrum(grid1000, rng.uniform(0.1, 1.0, 1000))
        ref_values = np.linspace(0.0, 1.0, 1000)  # zero at the boundary
        est = classical_kk_retrieve(cars, Spectrum(grid1000, ref_values))
        assert np.all(np.isfinite(est.values))

    def test_nonpositive_reference_raises(self, grid1000):
        cars = Spectrum(grid1000, np.ones(1000))
        with pytest.raises(NonPositiveReference):
            classical_kk_retrieve(cars, Spectrum(grid1000, -np.ones(1000)))
