# coding=utf-8
import unittest

import numpy as np

from uadps.denoisers import ConstantDenoiser, Denoiser, \
    GaussianPriorDenoiser, OracleDenoiser
from uadps.diffusion import make_schedule, one_step_denoise
from uadps.exceptions import CapabilityError, InvalidInput
from uadps.spectral import Spectrogram


def cn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def spec(rng, n_freqs=8, n_frames=12):
    return Spectrogram(cn(rng, (n_freqs, n_frames)), 2 * n_freqs, 4)


class OracleDenoiserTestCase(unittest.TestCase):
    def setUp(self):
        self.sched = make_schedule()
        self.rng = np.random.default_rng(21)
        self.truth = spec(self.rng)
        self.oracle = OracleDenoiser(self.truth, self.sched)

    def test_recovers_truth(self):
        for t in (1, 50, 300, 999):
            x_t = spec(self.rng)
            eps = self.oracle.estimate_noise(x_t, t)
            out = one_step_denoise(x_t, eps, t, self.sched)
            self.assertTrue(np.allclose(out.data, self.truth.data,
                                        rtol=1e-10, atol=1e-10))

    def test_vjp_is_jacobian_transpose(self):
        t = 120
        x_t, v, cot = spec(self.rng), spec(self.rng), spec(self.rng)
        h = 1e-3
        jv = (self.oracle.estimate_noise(x_t.with_data(x_t.data + h * v.data),
                                         t).data
              - self.oracle.estimate_noise(x_t, t).data) / h
        lhs = np.vdot(cot.data, jv).real
        rhs = np.vdot(self.oracle.vjp(x_t, t, cot).data, v.data).real
        self.assertTrue(abs(lhs - rhs) < 1e-8 * abs(lhs))

    def test_step_zero(self):
        out = self.oracle.estimate_noise(self.truth, 0)
        self.assertFalse(np.any(out.data))
        self.assertFalse(np.any(self.oracle.vjp(self.truth, 0,
                                                self.truth).data))


class GaussianPriorDenoiserTestCase(unittest.TestCase):
    def setUp(self):
        self.sched = make_schedule()
        self.rng = np.random.default_rng(22)

    def test_no_shrinkage(self):
        d = GaussianPriorDenoiser(np.inf, self.sched)
        x = spec(self.rng)
        t = 200
        self.assertTrue(np.allclose(
            d.posterior_mean(x, t).data,
            x.data / np.sqrt(self.sched.alpha_bar_at(t)), rtol=1e-14))
        eps = d.estimate_noise(x, t)
        self.assertTrue(np.allclose(one_step_denoise(x, eps, t,
                                                     self.sched).data,
                                    d.posterior_mean(x, t).data,
                                    rtol=1e-10, atol=1e-12))

    def test_zero_variance(self):
        d = GaussianPriorDenoiser(0.0, self.sched)
        x = spec(self.rng)
        t = 200
        self.assertFalse(np.any(d.posterior_mean(x, t).data))
        self.assertTrue(np.allclose(
            d.estimate_noise(x, t).data,
            x.data / np.sqrt(1 - self.sched.alpha_bar_at(t)), rtol=1e-14))

    def test_posterior_mean_by_integration(self):
        v = 0.7
        t = 400
        d = GaussianPriorDenoiser(v, self.sched)
        alpha_bar = self.sched.alpha_bar_at(t)
        observed = 0.9 - 0.4j
        grid = np.linspace(-8 * np.sqrt(v), 8 * np.sqrt(v), 801)
        re, im = np.meshgrid(grid, grid, indexing='ij')
        x0 = re + 1j * im
        prior = np.exp(-(re ** 2 + im ** 2) / (2 * v))
        likelihood = np.exp(-np.abs(observed - np.sqrt(alpha_bar) * x0) ** 2
                            / (2 * (1 - alpha_bar)))
        weights = prior * likelihood
        expected = np.sum(weights * x0) / np.sum(weights)

        data = np.zeros((8, 2), dtype=complex)
        data[0, 0] = observed
        got = d.posterior_mean(Spectrogram(data, 16, 4), t).data[0, 0]
        self.assertTrue(abs(got - expected) < 1e-3 * abs(expected))
        eps = d.estimate_noise(Spectrogram(data, 16, 4), t)
        back = one_step_denoise(Spectrogram(data, 16, 4), eps, t, self.sched)
        self.assertTrue(np.isclose(back.data[0, 0], got, rtol=1e-10))

    def test_shrinkage(self):
        d = GaussianPriorDenoiser(1.0, self.sched)
        t = 300
        alpha_bar = self.sched.alpha_bar_at(t)
        x0 = spec(self.rng)
        x_t = x0.with_data(np.sqrt(alpha_bar) * x0.data
                           + np.sqrt(1 - alpha_bar) * cn(self.rng, x0.shape))
        estimate = d.posterior_mean(x_t, t)
        self.assertTrue(np.linalg.norm(estimate.data)
                        <= np.linalg.norm(x_t.data) / np.sqrt(alpha_bar))

    def test_per_bin_variance_and_vjp(self):
        variance = self.rng.uniform(0.1, 2.0, (8, 12))
        d = GaussianPriorDenoiser(variance, self.sched)
        x, cot = spec(self.rng), spec(self.rng)
        t = 60
        gain = d.estimate_noise(x, t).data / x.data
        self.assertTrue(np.allclose(gain.imag, 0, atol=1e-12))
        self.assertTrue(np.allclose(d.vjp(x, t, cot).data,
                                    gain.real * cot.data, rtol=1e-12))

    def test_invalid_variance(self):
        with self.assertRaises(InvalidInput):
            GaussianPriorDenoiser(-1.0, self.sched)
        with self.assertRaises(InvalidInput):
            GaussianPriorDenoiser(np.nan, self.sched)


class CapabilityTestCase(unittest.TestCase):
    def test_base_has_no_vjp(self):
        rng = np.random.default_rng(23)
        x = spec(rng)
        d = Denoiser()
        self.assertFalse(d.has_vjp)
        with self.assertRaises(CapabilityError):
            d.vjp(x, 1, x)
        with self.assertRaises(NotImplementedError):
            d.estimate_noise(x, 1)

    def test_constant(self):
        rng = np.random.default_rng(24)
        eps = spec(rng)
        with ConstantDenoiser(eps) as d:
            self.assertTrue(np.array_equal(d.estimate_noise(spec(rng),
                                                            5).data,
                                           eps.data))
            self.assertFalse(np.any(d.vjp(eps, 5, eps).data))
