# coding=utf-8
"""Refinement of discriminative source estimates by guided diffusion sampling.

    mixture, estimates -> SCM of the residual noise
                       -> noised estimates at step t_start
                       -> guided reverse sampling down to step 0
                       -> one-tap alignment to the estimates
                       -> interpolation with the estimates
"""
import dataclasses
import logging

from . import keyvalue
from .diffusion import INIT_STREAM, PRIOR_STREAM, forward_to_step, \
    prior_step, substream
from .exceptions import InvalidInput
from .fcp import FcpConfig, apply_atf, fcp_estimate
from .guidance import GradMode, GuidanceConfig, GuidanceReport, \
    apply_guidance, likelihood_grad, per_source
from .scm import LOAD_DELTA, estimate_noise, quadratic_form, scm_ema, \
    scm_inverse
from .spectral import EPS_MAG, MultiSpectrogram, compress, decompress

logger = logging.getLogger(__name__)

ALIGN_RIDGE = 1e-12


@dataclasses.dataclass(frozen=True)
class RefineConfig(object):
    t_start: int = 300
    xi: float = 0.4
    alpha_interp: float = 0.5
    eta: float = 0.95
    fcp: FcpConfig = FcpConfig()
    align_taps: int = 1
    align_ridge: float = ALIGN_RIDGE
    seed: int = 0
    grad_mode: GradMode = GradMode.DETACHED
    stride: int = 1
    differentiate_through_fcp: bool = False
    eps_mag: float = EPS_MAG
    load_delta: float = LOAD_DELTA

    def __post_init__(self):
        if self.t_start < 0:
            raise InvalidInput('t_start must be >= 0')
        if not 0 <= self.alpha_interp <= 1:
            raise InvalidInput('alpha_interp must be in [0, 1]')
        if not 0 <= self.eta < 1:
            raise InvalidInput('eta must be in [0, 1)')
        if self.align_taps < 1:
            raise InvalidInput('align_taps must be >= 1')
        if self.stride < 1:
            raise InvalidInput('stride must be >= 1')
        if self.seed < 0:
            raise InvalidInput('seed must be >= 0')
        # validates xi, eps_mag and the gradient mode
        object.__setattr__(self, 'grad_mode', self.guidance.grad_mode)

    @property
    def guidance(self):
        return GuidanceConfig(self.xi, self.grad_mode, self.eps_mag,
                              self.differentiate_through_fcp)

    def steps(self):
        return list(range(self.t_start, 0, -self.stride))


@dataclasses.dataclass
class RefineResult(object):
    refined: list
    aligned: list
    dps_raw: list
    scm: object
    reports: list
    final_quadratic: float = None


def prepare_scm(mixture, discriminative, fcp_cfg, eta, load_delta=LOAD_DELTA):
    """Inverse noise SCM field and ATFs fitted to the discriminative
    estimates."""
    if not discriminative:
        raise InvalidInput('at least one source estimate is required')
    filters = [fcp_estimate(x, mixture, fcp_cfg) for x in discriminative]
    noise = estimate_noise(mixture, discriminative, filters)
    field = scm_ema(noise, eta, load_delta)
    return scm_inverse(field), filters


def align_sources(dps_out, discriminative, gamma, n_taps=1,
                  ridge=ALIGN_RIDGE):
    if len(dps_out) != len(discriminative):
        raise InvalidInput('need one estimate per sampled source')
    cfg = FcpConfig(n_taps=n_taps, gamma=gamma, ridge=ridge)
    aligned = []
    for x, target in zip(dps_out, discriminative):
        target_multi = MultiSpectrogram.from_channels([target])
        filt = fcp_estimate(x, target_multi, cfg)
        aligned.append(target.with_data(apply_atf(x, filt).data[0]))
    return aligned


def interpolate(discriminative, aligned, alpha):
    return [x.with_data(alpha * x.data + (1.0 - alpha) * a.data)
            for x, a in zip(discriminative, aligned)]


def final_residual(mixture, sources, inv_scm, fcp_cfg):
    filters = [fcp_estimate(x, mixture, fcp_cfg) for x in sources]
    return quadratic_form(estimate_noise(mixture, sources, filters), inv_scm)


def refine(mixture, discriminative, denoisers, cfg, sched, inv_scm=None,
           stream_ids=None, observer=None):
    """Run the refinement on K source estimates of ``mixture``.

    ``inv_scm`` replaces the SCM estimated from the estimates.
    ``stream_ids`` keys each source's random substreams (default 0..K-1);
    ``observer`` is called with the GuidanceReport of every step.
    """
    if not discriminative:
        raise InvalidInput('at least one source estimate is required')
    for x in discriminative:
        mixture.check_compatible(x)
    if cfg.t_start > sched.T:
        raise InvalidInput('t_start {} exceeds T = {}'.format(cfg.t_start,
                                                             sched.T))
    n_sources = len(discriminative)
    denoisers = per_source(denoisers, n_sources)
    if stream_ids is None:
        stream_ids = list(range(n_sources))
    if len(stream_ids) != n_sources:
        raise InvalidInput('need one stream id per source')

    if inv_scm is None:
        inv_scm, _ = prepare_scm(mixture, discriminative, cfg.fcp, cfg.eta,
                                 cfg.load_delta)
        logger.info('noise SCM prepared from %d source estimates',
                    n_sources)

    if cfg.t_start == 0:
        aligned = list(discriminative)
        return RefineResult(
            refined=interpolate(discriminative, aligned, cfg.alpha_interp),
            aligned=aligned, dps_raw=list(discriminative), scm=inv_scm,
            reports=[])

    xbar = [forward_to_step(compress(x), cfg.t_start, sched,
                            rng=substream(cfg.seed, INIT_STREAM, key))
            for x, key in zip(discriminative, stream_ids)]
    guidance = cfg.guidance
    steps = cfg.steps()
    reports = []
    for i, t in enumerate(steps):
        t_prev = steps[i + 1] if i + 1 < len(steps) else 0
        eps_hat = [d.estimate_noise(x, t) for d, x in zip(denoisers, xbar)]
        x_prev = [prior_step(x, e, t, sched, t_prev=t_prev,
                             rng=substream(cfg.seed, PRIOR_STREAM, key, t))
                  for x, e, key in zip(xbar, eps_hat, stream_ids)]
        if cfg.xi == 0:
            xbar = x_prev
            report = GuidanceReport.unguided(t, n_sources)
        else:
            G, report = likelihood_grad(xbar, mixture, inv_scm, sched, t,
                                        denoisers, cfg.fcp, guidance,
                                        eps_hat=eps_hat)
            xbar = apply_guidance(x_prev, G, t, sched, cfg.xi,
                                  t_prev=t_prev)
        reports.append(report)
        logger.debug('step %s', keyvalue.format_record(report.as_record()))
        if observer is not None:
            observer(report)
    logger.info('sampled %d steps from t=%d', len(steps), cfg.t_start)

    dps_raw = [decompress(x) for x in xbar]
    aligned = align_sources(dps_raw, discriminative, cfg.fcp.gamma,
                            n_taps=cfg.align_taps, ridge=cfg.align_ridge)
    logger.info('aligned %d sources', n_sources)
    return RefineResult(
        refined=interpolate(discriminative, aligned, cfg.alpha_interp),
        aligned=aligned, dps_raw=dps_raw, scm=inv_scm, reports=reports,
        final_quadratic=final_residual(mixture, dps_raw, inv_scm, cfg.fcp))
