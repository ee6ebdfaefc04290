# coding=utf-8
"""Likelihood score of the multichannel mixture and the guided update.

The scalar being differentiated is the noise quadratic form

    f = sum_{l,f} N^H Phi^-1 N,   N = Y - sum_k H^k * decompress(x0bar^k)

where x0bar^k is the one-step denoised state of source k. Gradients are
packed as d/dRe + 1j d/dIm, so for f = |N|^2 the gradient is 2N. The score
returned to the sampler is G = -1/2 grad f.
"""
import collections
import dataclasses
import enum

import numpy as np

from .diffusion import PROBE_STREAM, one_step_denoise, substream
from .exceptions import CapabilityError, InvalidInput
from .fcp import (apply_atf_adjoint, apply_atf_filter_adjoint, fcp_estimate,
                  fcp_estimate_vjp)
from .scm import estimate_noise, quadratic_form
from .spectral import EPS_MAG, decompress, decompress_vjp


class GradMode(enum.Enum):
    DETACHED = 'detached'
    FULL_VJP = 'vjp'


@dataclasses.dataclass(frozen=True)
class GuidanceConfig(object):
    xi: float = 0.4
    grad_mode: GradMode = GradMode.DETACHED
    eps_mag: float = EPS_MAG
    differentiate_through_fcp: bool = False

    def __post_init__(self):
        if not np.isfinite(self.xi) or self.xi < 0:
            raise InvalidInput('xi must be finite and >= 0')
        if not self.eps_mag > 0:
            raise InvalidInput('eps_mag must be positive')
        object.__setattr__(self, 'grad_mode', GradMode(self.grad_mode))


@dataclasses.dataclass
class GuidanceReport(object):
    quadratic_value: float
    grad_norms: list
    fcp_solve_failures: int
    step: int = None

    @classmethod
    def unguided(cls, step, n_sources):
        return cls(quadratic_value=None, grad_norms=[0.0] * n_sources,
                   fcp_solve_failures=0, step=step)

    def as_record(self):
        record = collections.OrderedDict(step=self.step,
                                         quadratic=self.quadratic_value)
        for k, norm in enumerate(self.grad_norms):
            record['grad_norm_{}'.format(k)] = norm
        record['fcp_failures'] = self.fcp_solve_failures
        return record


Chain = collections.namedtuple(
    'Chain', 'eps_hat x0bar x0 filters noise weighted_noise value')


def per_source(denoisers, n_sources):
    if isinstance(denoisers, (list, tuple)):
        if len(denoisers) != n_sources:
            raise InvalidInput('need one denoiser per source')
        return list(denoisers)
    return [denoisers] * n_sources


def evaluate_chain(xbar_t, mixture, inv_scm, sched, t, denoisers, fcp_cfg,
                   eps_hat=None, filters=None):
    """Forward chain x_t -> x0bar -> x0 -> ATFs -> noise -> f.

    Passing ``eps_hat`` or ``filters`` holds those quantities fixed.
    """
    if not xbar_t:
        raise InvalidInput('at least one source is required')
    sched.check_step(t)
    if eps_hat is None:
        denoisers = per_source(denoisers, len(xbar_t))
        eps_hat = [d.estimate_noise(x, t) for d, x in zip(denoisers, xbar_t)]
    x0bar = [one_step_denoise(x, e, t, sched) for x, e in zip(xbar_t, eps_hat)]
    x0 = [decompress(x) for x in x0bar]
    if filters is None:
        filters = [fcp_estimate(x, mixture, fcp_cfg) for x in x0]
    noise = estimate_noise(mixture, x0, filters)
    weighted = inv_scm.apply(noise)
    return Chain(eps_hat, x0bar, x0, filters, noise, weighted,
                 quadratic_form(noise, inv_scm, applied=weighted))


def likelihood_grad(xbar_t, mixture, inv_scm, sched, t, denoisers, fcp_cfg,
                    cfg, eps_hat=None):
    denoisers = per_source(denoisers, len(xbar_t))
    full_vjp = cfg.grad_mode is GradMode.FULL_VJP
    if full_vjp:
        for d in denoisers:
            if not d.has_vjp:
                raise CapabilityError(
                    '{} cannot be used with the full VJP gradient'.format(
                        type(d).__name__))

    chain = evaluate_chain(xbar_t, mixture, inv_scm, sched, t, denoisers,
                           fcp_cfg, eps_hat=eps_hat)
    residual_grad = chain.weighted_noise.with_data(
        2.0 * chain.weighted_noise.data)

    alpha_bar = sched.alpha_bar_at(t)
    grads = []
    for k, x_t in enumerate(xbar_t):
        filt = chain.filters[k]
        g_x0 = -apply_atf_adjoint(residual_grad, filt).data
        if cfg.differentiate_through_fcp:
            taps_grad = -apply_atf_filter_adjoint(chain.x0[k], residual_grad,
                                                  filt)
            g_x0 = g_x0 + fcp_estimate_vjp(chain.x0[k], mixture, filt,
                                           taps_grad, fcp_cfg).data
        g_x0bar = decompress_vjp(chain.x0bar[k], chain.x0bar[k].with_data(
            g_x0), cfg.eps_mag)
        g_xt = g_x0bar.data / np.sqrt(alpha_bar)
        if full_vjp:
            g_eps = denoisers[k].vjp(x_t, t, g_x0bar).data
            g_xt = g_xt - np.sqrt(1.0 - alpha_bar) / np.sqrt(alpha_bar) * g_eps
        grads.append(x_t.with_data(-0.5 * g_xt))

    report = GuidanceReport(
        quadratic_value=chain.value,
        grad_norms=[float(np.linalg.norm(g.data)) for g in grads],
        fcp_solve_failures=sum(len(f.failures) for f in chain.filters),
        step=t)
    return grads, report


def apply_guidance(x_prev, G, t, sched, xi, t_prev=None):
    if len(x_prev) != len(G):
        raise InvalidInput('need one score per source')
    if xi == 0:
        return list(x_prev)
    alpha, beta, _ = sched.transition(t, t_prev)
    scale = xi * beta / np.sqrt(alpha)
    out = []
    for x, g in zip(x_prev, G):
        x.check_compatible(g)
        out.append(x.with_data(x.data + scale * g.data))
    return out


def conditional_noise(eps_hat, G, t, sched):
    """Noise estimate conditioned on the mixture: eps_hat - sqrt(1-abar) G."""
    return eps_hat.with_data(
        eps_hat.data - np.sqrt(1.0 - sched.alpha_bar_at(t)) * G.data)


def finite_diff_check(xbar_t, mixture, inv_scm, sched, t, denoisers, fcp_cfg,
                      cfg, n_probes=64, h=1e-4, seed=0):
    """Worst relative error of the analytic gradient over random probes.

    The finite differences use the same chain as the analytic gradient:
    eps_hat is frozen in detached mode and the ATFs are frozen unless the
    gradient differentiates through FCP.
    """
    # x0bar moves by step / sqrt(abar_t); keep that displacement near h
    h = h * np.sqrt(sched.alpha_bar_at(t))
    denoisers = per_source(denoisers, len(xbar_t))
    G, _ = likelihood_grad(xbar_t, mixture, inv_scm, sched, t, denoisers,
                           fcp_cfg, cfg)
    base = evaluate_chain(xbar_t, mixture, inv_scm, sched, t, denoisers,
                          fcp_cfg)
    frozen_eps = base.eps_hat if cfg.grad_mode is GradMode.DETACHED else None
    frozen_filters = None if cfg.differentiate_through_fcp else base.filters

    def value_at(k, f, l, step):
        points = list(xbar_t)
        data = points[k].data.copy()
        data[f, l] += step
        points[k] = points[k].with_data(data)
        return evaluate_chain(points, mixture, inv_scm, sched, t, denoisers,
                              fcp_cfg, eps_hat=frozen_eps,
                              filters=frozen_filters).value

    # below this a component is compared in absolute terms: a small
    # fraction of the largest component, or the rounding noise of f / h
    grad_scale = max(np.abs(g.data).max() for g in G)
    floor = max(2.0 * 1e-4 * grad_scale, 1e-12 * abs(base.value) / h,
                np.finfo(float).tiny)
    rng = substream(seed, PROBE_STREAM)
    n_freqs, n_frames = xbar_t[0].shape
    worst = 0.0
    for _ in range(n_probes):
        k = int(rng.integers(len(xbar_t)))
        f = int(rng.integers(n_freqs))
        l = int(rng.integers(n_frames))
        unit = 1.0 if rng.integers(2) == 0 else 1j
        numeric = (value_at(k, f, l, h * unit)
                   - value_at(k, f, l, -h * unit)) / (2.0 * h)
        component = G[k].data[f, l]
        analytic = -2.0 * (component.real if unit == 1.0 else component.imag)
        error = abs(numeric - analytic) / max(abs(numeric), abs(analytic),
                                              floor)
        worst = max(worst, error)
    return worst
