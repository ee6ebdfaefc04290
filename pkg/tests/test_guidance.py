# coding=utf-8
import unittest

import numpy as np

from uadps.denoisers import ConstantDenoiser, Denoiser, \
    GaussianPriorDenoiser, OracleDenoiser
from uadps.diffusion import forward_to_step, make_schedule, prior_step, \
    substream
from uadps.exceptions import CapabilityError, InvalidInput
from uadps.fcp import AtfFilter, FcpConfig, apply_atf, fcp_estimate
from uadps.guidance import GradMode, GuidanceConfig, apply_guidance, \
    conditional_noise, evaluate_chain, finite_diff_check, likelihood_grad
from uadps.scm import ScmField
from uadps.spectral import MultiSpectrogram, Spectrogram, compress

N_FREQS = 8
N_FRAMES = 16


def cn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_inverse_field(rng, n_channels):
    cov = np.empty((N_FRAMES, N_FREQS, n_channels, n_channels), dtype=complex)
    for l in range(N_FRAMES):
        for f in range(N_FREQS):
            a = cn(rng, (n_channels, n_channels))
            cov[l, f] = np.linalg.inv(a @ np.conj(a.T) + np.eye(n_channels))
    cov = 0.5 * (cov + np.conj(np.swapaxes(cov, -1, -2)))
    return ScmField(cov, inverted=True)


class Problem(object):
    """Small random scene with its noised compressive-domain estimates."""

    def __init__(self, seed, n_sources=1, n_channels=3, n_taps=2,
                 noise=0.3, t=100, inv_scm=None, causal_offset=0):
        rng = np.random.default_rng(seed)
        self.sched = make_schedule()
        self.t = t
        self.clean = [Spectrogram(cn(rng, (N_FREQS, N_FRAMES)), 2 * N_FREQS,
                                  4) for _ in range(n_sources)]
        self.filters = [AtfFilter(cn(rng, (n_channels, n_taps, N_FREQS)))
                        for _ in range(n_sources)]
        data = sum(apply_atf(x, h).data
                   for x, h in zip(self.clean, self.filters))
        data = data + noise * cn(rng, data.shape)
        self.mixture = MultiSpectrogram(data, 2 * N_FREQS, 4)
        self.inv_scm = inv_scm if inv_scm is not None \
            else random_inverse_field(rng, n_channels)
        self.fcp_cfg = FcpConfig(n_taps=n_taps, causal_offset=causal_offset)
        self.truth = [compress(x) for x in self.clean]
        estimates = [x.with_data(x.data + 0.3 * cn(rng, x.shape))
                     for x in self.clean]
        self.xbar = [forward_to_step(compress(x), t, self.sched,
                                     rng=substream(seed, 0, k))
                     for k, x in enumerate(estimates)]

    def oracles(self):
        return [OracleDenoiser(x, self.sched) for x in self.truth]

    def grad(self, denoisers, cfg, **kwargs):
        return likelihood_grad(self.xbar, self.mixture, self.inv_scm,
                               self.sched, self.t, denoisers, self.fcp_cfg,
                               cfg, **kwargs)

    def check(self, denoisers, cfg, n_probes=64, seed=0):
        return finite_diff_check(self.xbar, self.mixture, self.inv_scm,
                                 self.sched, self.t, denoisers, self.fcp_cfg,
                                 cfg, n_probes=n_probes, seed=seed)


class NoJacobian(Denoiser):
    def __init__(self, inner):
        self.inner = inner

    def estimate_noise(self, x_t, t):
        return self.inner.estimate_noise(x_t, t)


class LikelihoodGradTestCase(unittest.TestCase):
    def setUp(self):
        self.problem = Problem(41)
        self.detached = GuidanceConfig()
        self.full = GuidanceConfig(grad_mode='vjp')

    def test_config(self):
        self.assertTrue(self.full.grad_mode is GradMode.FULL_VJP)
        self.assertTrue(self.detached.grad_mode is GradMode.DETACHED)
        with self.assertRaises(InvalidInput):
            GuidanceConfig(xi=-1.0)
        with self.assertRaises(InvalidInput):
            GuidanceConfig(xi=np.inf)
        with self.assertRaises(InvalidInput):
            GuidanceConfig(eps_mag=0.0)
        with self.assertRaises(ValueError):
            GuidanceConfig(grad_mode='sideways')

    def test_report(self):
        p = Problem(42, n_sources=2)
        G, report = p.grad(p.oracles(), self.detached)
        self.assertTrue(len(G) == 2)
        self.assertTrue(report.quadratic_value >= 0)
        self.assertTrue(report.step == p.t)
        self.assertTrue(report.fcp_solve_failures == 0)
        self.assertTrue(np.allclose(report.grad_norms,
                                    [np.linalg.norm(g.data) for g in G]))
        record = report.as_record()
        self.assertTrue(list(record) == ['step', 'quadratic', 'grad_norm_0',
                                         'grad_norm_1', 'fcp_failures'])

    def test_zero_residual(self):
        p = Problem(43, noise=0.0)
        G, report = p.grad(p.oracles(), self.detached)
        for g in G:
            self.assertTrue(np.abs(g.data).max() < 1e-6)
        self.assertTrue(report.quadratic_value < 1e-12)

    def test_white_noise_score(self):
        for seed in range(10):
            self.check_white_noise_score(440 + seed, 0.2 + 0.05 * seed)

    def check_white_noise_score(self, seed, sigma2):
        p = Problem(seed, inv_scm=ScmField.identity(N_FRAMES, N_FREQS, 3,
                                                    scale=1.0 / sigma2))
        oracle = p.oracles()[0]
        G, _ = p.grad([oracle], self.detached)

        s, t = p.sched, p.t
        alpha_bar = s.alpha_bar_at(t)
        x = p.xbar[0].data
        eps = oracle.estimate_noise(p.xbar[0], t).data
        x0bar = (x - np.sqrt(1 - alpha_bar) * eps) / np.sqrt(alpha_bar)
        x0 = np.abs(x0bar) * x0bar
        filt = fcp_estimate(p.xbar[0].with_data(x0), p.mixture, p.fcp_cfg)
        n_channels, n_taps, _ = filt.taps.shape

        residual = p.mixture.data.copy()
        for c in range(n_channels):
            for j in range(n_taps):
                for l in range(j, N_FRAMES):
                    residual[c, :, l] -= filt.taps[c, j] * x0[:, l - j]
        g0 = np.zeros(x0.shape, dtype=complex)
        for c in range(n_channels):
            for j in range(n_taps):
                for l in range(N_FRAMES - j):
                    g0[:, l] -= 2.0 / sigma2 * np.conj(filt.taps[c, j]) \
                        * residual[c, :, l + j]
        expected = np.zeros(x0.shape, dtype=complex)
        for index in np.ndindex(x0.shape):
            z = x0bar[index]
            r = abs(z)
            jac = np.array([[r + z.real ** 2 / r, z.real * z.imag / r],
                            [z.real * z.imag / r, r + z.imag ** 2 / r]])
            out = jac @ np.array([g0[index].real, g0[index].imag])
            expected[index] = out[0] + 1j * out[1]
        expected = -0.5 * expected / np.sqrt(alpha_bar)

        error = np.linalg.norm(G[0].data - expected) / np.linalg.norm(expected)
        self.assertTrue(error < 1e-8)

    def test_constant_denoiser_modes_agree(self):
        p = self.problem
        d = ConstantDenoiser(p.xbar[0].with_data(cn(
            np.random.default_rng(0), p.xbar[0].shape)))
        detached, _ = p.grad([d], self.detached)
        full, _ = p.grad([d], self.full)
        self.assertTrue(np.allclose(detached[0].data, full[0].data,
                                    rtol=1e-14, atol=0))

    def test_full_vjp_needs_jacobian(self):
        p = self.problem
        with self.assertRaises(CapabilityError):
            p.grad([NoJacobian(p.oracles()[0])], self.full)
        G, _ = p.grad([NoJacobian(p.oracles()[0])], self.detached)
        self.assertTrue(len(G) == 1)

    def test_score_scales_with_mismatch(self):
        p = self.problem
        d = GaussianPriorDenoiser(1.0, p.sched)
        x0 = evaluate_chain(p.xbar, p.mixture, p.inv_scm, p.sched, p.t, [d],
                            p.fcp_cfg).x0[0]
        fitted = apply_atf(x0, p.filters[0]).data
        mismatch = cn(np.random.default_rng(45), fitted.shape)
        # a flat weighting keeps the FCP fit linear in the mixture
        p.fcp_cfg = FcpConfig(n_taps=2, gamma=1e12)

        def score(scale):
            p.mixture = MultiSpectrogram(fitted + scale * mismatch,
                                         2 * N_FREQS, 4)
            return p.grad([d], self.detached)[0][0].data

        unit = score(1.0)
        self.assertTrue(np.linalg.norm(score(0.0))
                        < 1e-8 * np.linalg.norm(unit))
        for scale in (0.1, 0.5, 2.0):
            error = np.linalg.norm(score(scale) - scale * unit)
            self.assertTrue(error < 1e-6 * scale * np.linalg.norm(unit))

    def test_descent_direction(self):
        p = self.problem
        denoisers = p.oracles()
        base = evaluate_chain(p.xbar, p.mixture, p.inv_scm, p.sched, p.t,
                              denoisers, p.fcp_cfg)
        G, _ = p.grad(denoisers, self.detached, eps_hat=base.eps_hat)
        values = []
        for xi in (1e-3, 1e-2, 1e-1):
            moved = apply_guidance(p.xbar, G, p.t, p.sched, xi)
            values.append(evaluate_chain(
                moved, p.mixture, p.inv_scm, p.sched, p.t, denoisers,
                p.fcp_cfg, eps_hat=base.eps_hat, filters=base.filters).value)
        self.assertTrue(min(values) < base.value)


class FiniteDifferenceTestCase(unittest.TestCase):
    def scenes(self, base, **kwargs):
        for seed in range(10):
            yield seed, Problem(base + seed, n_sources=1 + seed % 2, **kwargs)

    def test_oracle_detached(self):
        for seed, p in self.scenes(500):
            error = p.check(p.oracles(), GuidanceConfig(), seed=seed)
            self.assertTrue(error < 1e-4)

    def test_gaussian_full_vjp(self):
        for seed, p in self.scenes(600):
            d = GaussianPriorDenoiser(1.0, p.sched)
            error = p.check(d, GuidanceConfig(grad_mode='vjp'), seed=seed)
            self.assertTrue(error < 1e-4)

    def test_gaussian_detached(self):
        for seed, p in self.scenes(610):
            d = GaussianPriorDenoiser(0.5, p.sched)
            self.assertTrue(p.check(d, GuidanceConfig(), seed=seed) < 1e-4)

    def test_oracle_full_vjp(self):
        p = Problem(62)
        self.assertTrue(p.check(p.oracles(),
                                GuidanceConfig(grad_mode='vjp')) < 1e-3)

    def test_through_fcp(self):
        cfg = GuidanceConfig(differentiate_through_fcp=True)
        for seed, p in self.scenes(630):
            self.assertTrue(p.check(p.oracles(), cfg, seed=seed) < 1e-3)
        for seed, p in self.scenes(640, causal_offset=1):
            self.assertTrue(p.check(p.oracles(), cfg, seed=seed) < 1e-3)
        vjp = GuidanceConfig(grad_mode='vjp', differentiate_through_fcp=True)
        for seed, p in self.scenes(650):
            d = GaussianPriorDenoiser(1.0, p.sched)
            self.assertTrue(p.check(d, vjp, seed=seed) < 1e-3)

    def test_near_pure_noise(self):
        # the displacement of x0bar is amplified by 1 / sqrt(abar_t)
        for t in (900, 999):
            p = Problem(660, t=t)
            self.assertTrue(p.check(p.oracles(), GuidanceConfig()) < 1e-4)

    def test_zero_state_is_finite(self):
        p = Problem(64)
        zero = p.xbar[0].with_data(np.zeros(p.xbar[0].shape))
        p.xbar = [zero]
        with self.assertLogs('uadps.fcp', level='WARNING'):
            error = p.check([ConstantDenoiser(zero)], GuidanceConfig(),
                            n_probes=8)
            G, report = p.grad([ConstantDenoiser(zero)], GuidanceConfig())
        self.assertTrue(np.isfinite(error))
        self.assertTrue(np.all(np.isfinite(G[0].data)))
        self.assertTrue(report.fcp_solve_failures > 0)


class ApplyGuidanceTestCase(unittest.TestCase):
    def setUp(self):
        self.sched = make_schedule()
        rng = np.random.default_rng(70)
        self.x = [Spectrogram(cn(rng, (N_FREQS, N_FRAMES)), 16, 4)
                  for _ in range(2)]
        self.G = [x.with_data(cn(rng, x.shape)) for x in self.x]

    def test_zero_scale(self):
        out = apply_guidance(self.x, self.G, 10, self.sched, 0.0)
        self.assertTrue(all(a is b for a, b in zip(out, self.x)))

    def test_zero_score(self):
        zeros = [g.with_data(np.zeros(g.shape)) for g in self.G]
        out = apply_guidance(self.x, zeros, 10, self.sched, 0.7)
        for a, b in zip(out, self.x):
            self.assertTrue(np.array_equal(a.data, b.data))

    def test_formula(self):
        t, xi = 25, 0.4
        s = self.sched
        out = apply_guidance(self.x, self.G, t, s, xi)
        for o, x, g in zip(out, self.x, self.G):
            expected = x.data + xi * s.beta[t - 1] / np.sqrt(
                s.alpha[t - 1]) * g.data
            self.assertTrue(np.allclose(o.data, expected, rtol=1e-12,
                                        atol=1e-12))
        with self.assertRaises(InvalidInput):
            apply_guidance(self.x, self.G[:1], t, s, xi)

    def test_conditional_noise(self):
        t = 40
        s = self.sched
        eps = self.x[1]
        zeros = np.zeros(eps.shape)
        guided = apply_guidance([prior_step(self.x[0], eps, t, s,
                                            noise=zeros)],
                                [self.G[0]], t, s, 1.0)[0]
        conditioned = prior_step(self.x[0],
                                 conditional_noise(eps, self.G[0], t, s),
                                 t, s, noise=zeros)
        self.assertTrue(np.allclose(guided.data, conditioned.data,
                                    rtol=1e-12, atol=1e-12))
