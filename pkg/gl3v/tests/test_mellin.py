import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from unittest import TestCase

from gl3v import mellin
from gl3v.errors import ContourError, ConvergenceError, DivergenceError, DomainError, ParityError
from gl3v.mellin import (BumpSpec, EmbeddingParams, ParityFunction, VerticalLineSpec, build_test_function,
                         mellin_phi_on_line)

SYNTHETIC = EmbeddingParams((0.3, 0.0, -0.3), (0, 0, 0))
SHORT_LINE = VerticalLineSpec(H=100.0, h=0.05)


def gaussian(parity=0):
    if parity:
        return ParityFunction(lambda x: x * np.exp(-np.pi * x * x), 1, mellin.GAUSS_EXTENT, order_at_zero=1)
    return ParityFunction(lambda x: np.exp(-np.pi * x * x), 0, mellin.GAUSS_EXTENT)


def mp_gaussian_mellin(w, parity=0):
    # 2 int_0^inf x^parity exp(-pi x^2) x^(w-1) dx
    z = (mpmath.mpc(w.real, w.imag) + parity) / 2
    return complex(mpmath.pi ** (-z) * mpmath.gamma(z))


class test_embedding_params(TestCase):
    def test_normalisation(self):
        self.assertRaises(DomainError, EmbeddingParams, (0.1, 0.0, 0.0), (0, 0, 0))
        self.assertRaises(DomainError, EmbeddingParams, (0.0, 0.0, 0.0), (1, 0, 0))
        self.assertRaises(DomainError, EmbeddingParams, (0.0, 0.0), (0, 0))
        self.assertRaises(DomainError, EmbeddingParams, (0.3, 0.0, -0.3), (0, 0, 0), True)

    def test_discrete_series(self):
        params = EmbeddingParams.discrete_series(23)
        self.assertEqual(params.lambdas, (0j, -11 + 0j, 11 + 0j))
        self.assertEqual(params.deltas, (1, 0, 1))
        self.assertTrue(params.is_ordered())
        self.assertTrue(params.overlapping_poles())
        self.assertRaises(DomainError, EmbeddingParams.discrete_series, 23, 0.0, (0, 0))
        self.assertRaises(DomainError, EmbeddingParams.discrete_series, 1)
        self.assertEqual(params, EmbeddingParams.discrete_series(23, 0.0, (0, 1)))
        self.assertNotEqual(params, EmbeddingParams.discrete_series(23, 0.0, (1, 0)))
        self.assertEqual(len({params, EmbeddingParams.discrete_series(23)}), 1)

    def test_contour(self):
        params = EmbeddingParams.discrete_series(23)
        self.assertTrue(params.holomorphic_on_contour(0, 0.75))
        self.assertFalse(params.holomorphic_on_contour(0, 0.25))
        self.assertFalse(SYNTHETIC.overlapping_poles())


class test_bump(TestCase):
    def test_support_and_parity(self):
        even = BumpSpec()
        odd = BumpSpec(parity=1)
        x = np.linspace(-2, 2, 81)
        self.assertTrue(np.all(even(x[np.abs(x) >= 1]) == 0))
        assert_allclose(even(-x), even(x))
        assert_allclose(odd(-x), -odd(x))
        self.assertEqual(BumpSpec(scale=2.0).extent, 2.0)
        self.assertRaises(DomainError, BumpSpec, 0, "box")
        self.assertRaises(DomainError, BumpSpec, 0, "bump", -1.0)

    def test_normalised(self):
        assert_allclose(BumpSpec().fourier(0.0), 1.0, rtol=1e-12)
        assert_allclose(BumpSpec(profile="gaussian", scale=2.0).fourier(0.0), 1.0, rtol=1e-12)
        assert_allclose(mellin._bump_mass(), 0.4439938161680794, rtol=1e-10)

    def test_default_family(self):
        params = EmbeddingParams.discrete_series(23)
        fam = build_test_function(2.0, 0, 0, params)
        self.assertEqual(fam.phi0.profile, "bump")
        value = fam.f(1.0)
        self.assertTrue(np.isfinite(value))
        assert_allclose(value, 1.0 ** 12 * 2 * np.cos(4 * np.pi) * fam.phi0.fourier(1.0))
        assert_allclose(fam.phi_hat(0.0), 2.0, rtol=1e-12)

    def test_derivatives(self):
        phi0 = BumpSpec()
        x = np.linspace(-0.9, 0.9, 37)
        step = 1e-5
        numeric = (phi0(x + step) - phi0(x - step)) / (2 * step)
        assert_allclose(phi0.derivative(x, 1), numeric, rtol=1e-6, atol=1e-9)
        gauss = BumpSpec(parity=1, profile="gaussian")
        numeric = (gauss.derivative(x + step, 1) - gauss.derivative(x - step, 1)) / (2 * step)
        assert_allclose(gauss.derivative(x, 2), numeric, rtol=1e-6, atol=1e-9)

    def test_fourier_matches_quadrature(self):
        for parity in (0, 1):
            phi0 = BumpSpec(parity=parity)
            g = ParityFunction(lambda x: phi0(x) * mellin._bump_mass(), parity, 1.0)
            for r in (0.5, 3.0, -2.0):
                assert_allclose(phi0.fourier(r) * mellin._bump_mass(), mellin.fourier_transform(g, r), atol=1e-9)

    def test_fourier_conjugate(self):
        phi0 = BumpSpec()
        for r in (0.7, 5.0):
            assert_allclose(phi0.fourier(-r), np.conj(phi0.fourier(r)), atol=1e-14)

    def test_fourier_decay(self):
        phi0 = BumpSpec()
        low = np.linspace(10, 20, 41)
        high = np.linspace(50, 100, 101)
        self.assertLess(np.max(np.abs(phi0.fourier(high)) * high ** 6),
                        np.max(np.abs(phi0.fourier(low)) * low ** 6))


class test_signed_mellin(TestCase):
    def test_gaussian(self):
        assert_allclose(mellin.signed_mellin(gaussian(), 1.0), 1.0, atol=1e-9)
        assert_allclose(mellin.signed_mellin(gaussian(), 2.0), 1.0 / np.pi, atol=1e-9)
        s = 0.4 + 2.5j
        assert_allclose(mellin.signed_mellin(gaussian(), s), mp_gaussian_mellin(s), rtol=1e-8)
        assert_allclose(mellin.signed_mellin(gaussian(1), s), mp_gaussian_mellin(s, 1), rtol=1e-8)

    def test_errors(self):
        self.assertRaises(ParityError, mellin.signed_mellin, gaussian(1), 1.0, 0)
        self.assertRaises(DivergenceError, mellin.signed_mellin, gaussian(), -0.5)

    def test_near_the_origin(self):
        for s in (0.1 + 0.5j, 0.05, 3.5 - 4j):
            assert_allclose(mellin.signed_mellin(gaussian(), s), mp_gaussian_mellin(s), rtol=1e-7)
        assert_allclose(mellin.signed_mellin(gaussian(1), -0.6 + 1j), mp_gaussian_mellin(-0.6 + 1j, 1), rtol=1e-7)

    def test_fourier_of_gaussian(self):
        assert_allclose(mellin.fourier_transform(gaussian(), 0.0), 1.0, atol=1e-10)
        assert_allclose(mellin.fourier_transform(gaussian(), 0.8), np.exp(-np.pi * 0.64), atol=1e-10)
        # x exp(-pi x^2) -> -i r exp(-pi r^2)
        assert_allclose(mellin.fourier_transform(gaussian(1), 0.8), -0.8j * np.exp(-np.pi * 0.64), atol=1e-10)


class test_mellin_fourier_bridge(TestCase):
    def test_even(self):
        for s in (0.5, 0.3 + 1.5j):
            self.assertLessEqual(mellin.mellin_fourier_residual(gaussian(), s), 1e-8)

    def test_odd(self):
        self.assertLessEqual(mellin.mellin_fourier_residual(gaussian(1), 0.5), 1e-8)

    @pytest.mark.slow
    def test_grid(self):
        for g in (gaussian(), gaussian(1)):
            for sr in np.linspace(0.2, 0.8, 5):
                for si in np.linspace(-2.0, 2.0, 5):
                    self.assertLessEqual(mellin.mellin_fourier_residual(g, complex(sr, si)), 1e-8)


class test_test_function(TestCase):
    def test_y_zero(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC)
        x = np.linspace(-1.5, 1.5, 31)
        assert_allclose(fam.phi(x), 2 * fam.phi0(x))
        self.assertFalse(fam.rescaled)
        self.assertFalse(fam.vanishes_near_zero)

    def test_support(self):
        fam = build_test_function(2.0, 1, 0, SYNTHETIC)
        x = np.array([-3.1, -0.9, 0.0, 0.9, 3.1])
        assert_allclose(fam.phi(x), 0.0)
        self.assertNotEqual(fam.phi(np.array([2.5]))[0], 0.0)
        self.assertTrue(fam.vanishes_near_zero)
        self.assertTrue(fam.rescaled)
        self.assertRaises(DomainError, build_test_function, -1.0, 0, 0, SYNTHETIC)

    def test_f_parity(self):
        x = np.linspace(0.1, 3.0, 30)
        for params in (SYNTHETIC, EmbeddingParams.discrete_series(23)):
            for eta in (0, 1):
                for omega in (0, 1):
                    fam = build_test_function(0.7, omega, eta, params)
                    assert_allclose(fam.f(-x), (-1.0) ** eta * fam.f(x), atol=1e-14, rtol=1e-12)

    def test_scaled(self):
        fam = build_test_function(0.5, 0, 0, SYNTHETIC)
        x = np.linspace(-2, 2, 9)
        assert_allclose(fam.scaled(3.0).f(x), 3.0 * fam.f(x))


class test_mellin_on_line(TestCase):
    def test_continuation_gaussian(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        w = np.array([1.5 - 3j, 0.3 + 1j, -0.5 + 2j, -2.7 + 0.5j])
        expected = [2 * mp_gaussian_mellin(v) for v in w]
        assert_allclose(mellin_phi_on_line(fam, w), expected, rtol=1e-8)

    def test_continuation_odd(self):
        fam = build_test_function(0.0, 0, 1, SYNTHETIC, profile="gaussian")
        w = np.array([0.3 + 1j, -0.4 - 2j])
        expected = [2 * mp_gaussian_mellin(v, 1) for v in w]
        assert_allclose(mellin_phi_on_line(fam, w), expected, rtol=1e-8)

    def test_against_quadrature(self):
        fam = build_test_function(2.0, 0, 0, SYNTHETIC)
        g = ParityFunction(fam.phi, fam.phi_parity, fam.phi_extent)
        for w in (0.75 + 3j, 1.2 - 10j):
            assert_allclose(mellin_phi_on_line(fam, w)[0], mellin.signed_mellin(g, w), rtol=1e-8)

    def test_shift_covariance(self):
        w = 0.75 + 1j * np.linspace(-50, 50, 41)
        for Y in (2.0, 5.0):
            fam = build_test_function(Y, 0, 0, SYNTHETIC)
            assert_allclose(mellin_phi_on_line(fam, w), Y ** w * mellin_phi_on_line(fam, w, rescaled=True),
                            rtol=1e-9)

    def test_envelope_constant(self):
        t = np.linspace(1.0, 200.0, 400)
        lambda3 = SYNTHETIC.lambdas[2]
        for N in (0, 2, 4):
            constants = []
            for Y in (2.0, 4.0, 8.0):
                fam = build_test_function(Y, 0, 0, SYNTHETIC)
                values = np.abs(mellin_phi_on_line(fam, 0.75 + 1j * t - lambda3, rescaled=True))
                constants.append(np.max(values * Y * (t / Y) ** N))
            self.assertLess(max(constants) / min(constants), 10.0)


class test_mellin_on_progression(TestCase):
    def check(self, fam, a, b, h, count, rescaled=False):
        k = np.arange(-count, count + 1)
        fast = mellin.mellin_phi_on_progression(fam, a, b, h, count, rescaled)
        direct = mellin_phi_on_line(fam, a + 1j * (b + h * k), rescaled)
        assert_allclose(fast, direct, rtol=1e-6, atol=1e-9 * np.max(np.abs(direct)))

    def test_gaussian(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        self.check(fam, 1.05, 0.3, 0.25, 40)
        self.check(fam, -0.4, 0.0, 0.25, 40)

    def test_bump(self):
        self.check(build_test_function(0.0, 0, 1, SYNTHETIC), 1.05, 0.0, 0.25, 40)
        fam = build_test_function(2.0, 0, 0, SYNTHETIC)
        self.check(fam, 1.05, 0.3, 0.25, 40, rescaled=True)

    def test_wide_window(self):
        # step too coarse for the u-window: direct evaluation
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        k = np.arange(-5, 6)
        assert_allclose(mellin.mellin_phi_on_progression(fam, 1.05, 0.0, 1.0, 5),
                        mellin_phi_on_line(fam, 1.05 + 1j * k), rtol=1e-12)


class test_adapted_line(TestCase):
    def test_gaussian_unchanged(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        self.assertEqual(mellin.adapted_line(SYNTHETIC, fam).H, mellin.DEFAULT_H)
        self.assertEqual(mellin.adapted_line(SYNTHETIC, fam, SHORT_LINE), SHORT_LINE)

    def test_bump_raised(self):
        params = EmbeddingParams.discrete_series(23)
        fam = build_test_function(0.0, 0, 0, params)
        self.assertGreater(mellin.f_transform(params, fam).tail_fraction, mellin.TAIL_RTOL)
        with self.assertLogs("gl3v.mellin", "WARNING"):
            line = mellin.adapted_line(params, fam, max_height=800.0)
        self.assertEqual(line.H, 800.0)
        self.assertEqual(line.h, mellin.DEFAULT_STEP)


class test_vertical_line(TestCase):
    def test_nodes(self):
        line = VerticalLineSpec(H=1.0, h=0.25)
        self.assertEqual(line.count, 4)
        assert_allclose(line.heights(), np.linspace(-1, 1, 9))
        assert_allclose(np.sum(line.weights()), 2.0)
        self.assertEqual(line.doubled().H, 2.0)
        self.assertRaises(ContourError, VerticalLineSpec, 0.75, 1.0, 0.3)
        self.assertRaises(ContourError, VerticalLineSpec, 0.75, -1.0, 0.1)


class test_f_transform(TestCase):
    def test_low_contour(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        self.assertRaises(ContourError, mellin.FTransform, SYNTHETIC, fam, VerticalLineSpec(sigma=0.4))

    def test_parity(self):
        for eta in (0, 1):
            fam = build_test_function(0.0, 0, eta, SYNTHETIC, profile="gaussian")
            transform = mellin.f_transform(SYNTHETIC, fam, SHORT_LINE)
            x = np.array([0.4, 1.3, 7.0])
            assert_allclose(transform(-x), (-1.0) ** eta * transform(x), atol=1e-12)
            self.assertRaises(DomainError, transform, 0.0)

    def test_memo(self):
        fam = build_test_function(0.0, 1, 0, SYNTHETIC, profile="gaussian")
        transform = mellin.f_transform(SYNTHETIC, fam, SHORT_LINE)
        first = transform(np.array([1.0, 2.0]))
        self.assertIs(mellin.f_transform(SYNTHETIC, fam, SHORT_LINE), transform)
        assert_allclose(transform(np.array([2.0, 1.0, 3.0]))[:2], first[::-1])

    def test_linearity(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        x = np.array([0.5, 2.0])
        base = mellin.FTransform(SYNTHETIC, fam, SHORT_LINE)(x)
        scaled = mellin.FTransform(SYNTHETIC, fam.scaled(-2.5), SHORT_LINE)(x)
        assert_allclose(scaled, -2.5 * base, rtol=1e-12)

    def test_accuracy_flag(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        with self.assertLogs("gl3v.mellin", "WARNING"):
            value = mellin.voronoi_transform_F(SYNTHETIC, fam, 1.0, VerticalLineSpec(H=2.0, h=0.05), tol=1e-12)
        self.assertFalse(value.accurate)
        value = mellin.voronoi_transform_F(SYNTHETIC, fam, 1.0, SHORT_LINE)
        self.assertTrue(value.accurate)

    @pytest.mark.slow
    def test_against_repeated_integral(self):
        for eta in (0, 1):
            fam = build_test_function(0.0, 0, eta, SYNTHETIC, profile="gaussian")
            for x in (0.7, 1.5, -2.0):
                contour = mellin.voronoi_transform_F(SYNTHETIC, fam, x).value
                direct = mellin.direct_F_oracle(SYNTHETIC, fam, x)
                self.assertLessEqual(abs(contour - direct), 1e-6 * max(1.0, abs(direct)))

    @pytest.mark.slow
    def test_doubled_height(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        line = VerticalLineSpec()
        x = np.array([0.5, 3.0, 20.0])
        value = mellin.FTransform(SYNTHETIC, fam, line)
        doubled = mellin.FTransform(SYNTHETIC, fam, line.doubled())
        self.assertTrue(np.all(np.abs(doubled(x) - value(x)) <= value.error_estimate(x) + 1e-10))


class test_oracle(TestCase):
    def test_cone(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        flat = EmbeddingParams((0, 0, 0), (0, 0, 0))
        self.assertRaises(ConvergenceError, mellin.direct_F_oracle, flat, fam, 1.0)
        self.assertRaises(DomainError, mellin.direct_F_oracle, SYNTHETIC, fam, 0.0)

    def test_power_at_origin(self):
        self.assertEqual(mellin._signed_power(0.0, 0, 0.3), 0.0)
        self.assertEqual(mellin._signed_power(0.0, 1, -0.3), 0.0)
        self.assertEqual(mellin._signed_power(0.0, 0, 0), 1.0)
        assert_allclose(mellin._signed_power(-4.0, 1, 0.5), -0.5)
        assert_allclose(mellin._signed_power(-4.0, 0, 0.5), 0.5)

    @pytest.mark.slow
    def test_runs(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        value = mellin.direct_F_oracle(SYNTHETIC, fam, 0.7)
        self.assertTrue(np.isfinite(value))
        self.assertGreater(abs(value), 0.0)


class test_regimes(TestCase):
    def test_classification(self):
        fam = build_test_function(0.5, 0, 0, SYNTHETIC)
        self.assertEqual(mellin.regime_envelope(fam, 10.0, -0.3)[0], "small-Y")
        fam = build_test_function(4.0, 0, 0, SYNTHETIC)
        self.assertEqual(mellin.regime_envelope(fam, 2.0, -0.3)[0], "small-x")
        self.assertEqual(mellin.regime_envelope(fam, 10.0, -0.3)[0], "medium-x")
        regime, exponent, envelope = mellin.regime_envelope(fam, 640.0, -0.3, N=2)
        self.assertEqual(regime, "large-x")
        self.assertEqual(exponent, -2.0)
        assert_allclose(envelope, 4.0 ** 1.5 * 10.0 ** -2)

    def test_decay_slope(self):
        x = np.array([1.0, 10.0, 100.0])
        assert_allclose(mellin.decay_slope(x, 3.0 * x ** -2.5), -2.5)

    @pytest.mark.slow
    def test_small_Y_decay(self):
        fam = build_test_function(0.5, 0, 0, SYNTHETIC, profile="gaussian")
        transform = mellin.f_transform(SYNTHETIC, fam)
        x = np.linspace(5.0, 50.0, 10)
        self.assertLessEqual(mellin.decay_slope(x, transform(x)), -4.0)
        report = mellin.regime_report(SYNTHETIC, fam, 20.0)
        self.assertEqual(report.regime, "small-Y")
        self.assertFalse(report.overlapping_poles)

    def test_report_error(self):
        fam = build_test_function(0.0, 0, 0, SYNTHETIC, profile="gaussian")
        report = mellin.regime_report(SYNTHETIC, fam, 2.0)
        transform = mellin.f_transform(SYNTHETIC, fam)
        assert_allclose(report.measured, abs(transform(2.0)))
        assert_allclose(report.error, transform.error_estimate(2.0)[0])
        self.assertTrue(report.accurate)
        with self.assertLogs("gl3v.mellin", "WARNING"):
            report = mellin.regime_report(SYNTHETIC, fam, 2.0, rtol=0.0)
        self.assertFalse(report.accurate)

    @pytest.mark.slow
    def test_small_x_bounded(self):
        peaks = []
        for Y in (2.0, 4.0, 8.0):
            fam = build_test_function(Y, 0, 0, SYNTHETIC)
            reports = [mellin.regime_report(SYNTHETIC, fam, x) for x in np.linspace(0.2 * Y, Y, 9)]
            self.assertEqual({r.regime for r in reports}, {"small-x"})
            self.assertTrue(all(r.error < r.envelope for r in reports))
            peaks.append(max(r.ratio for r in reports))
        self.assertLessEqual(max(peaks), 10.0 * peaks[0])

    @pytest.mark.slow
    def test_large_x_decay(self):
        Y = 4.0
        fam = build_test_function(Y, 0, 0, SYNTHETIC)
        transform = mellin.f_transform(SYNTHETIC, fam, mellin.adapted_line(SYNTHETIC, fam))
        medium = np.max(np.abs(transform(np.linspace(Y, Y ** 3, 25))))
        far = np.abs(transform(np.linspace(10 * Y ** 3, 20 * Y ** 3, 25)))
        self.assertLessEqual(np.max(far), 0.05 * medium)
        self.assertEqual(mellin.regime_report(SYNTHETIC, fam, 10 * Y ** 3).regime, "large-x")
