# coding=utf-8
"""Configuration layering and object construction shared by the commands."""
import collections

import click
from flask import current_app
from werkzeug.datastructures import MultiDict

from .. import audio, keyvalue
from ..denoisers import ExternalDenoiser, GaussianPriorDenoiser, \
    OracleDenoiser
from ..diffusion import make_schedule
from ..exceptions import ConfigurationError, InvalidInput
from ..fcp import FcpConfig
from ..guidance import GuidanceConfig
from ..harness import SceneSpec
from ..pipeline import RefineConfig
from ..spectral import compress, stft

# flags whose name is not the config key with dashes
flag_names = {'config_path': 'config', 'duration_s': 'duration',
              'grad_threshold': 'threshold'}


def flag(name):
    return '--' + flag_names.get(name, name.replace('_', '-'))


def options(*specs):
    def decorate(f):
        for spec in reversed(specs):
            f = spec(f)
        return f

    return decorate


def _option(name, text):
    return click.option(flag(name), name, default=None, help=text)


config_option = click.option('--config', 'config_path', default=None,
                             help='key=value file layered over defaults.')

analysis_options = [
    config_option,
    _option('fft_size', 'STFT size (power of two).'),
    _option('hop', 'STFT hop in samples.'),
    _option('seed', 'Master seed (default: UADPS_SEED or 0).'),
]

refine_only_options = [
    _option('xi', 'Likelihood guidance scale.'),
    _option('alpha', 'Weight of the input estimates in the output.'),
    _option('t_start', 'Diffusion step sampling starts from.'),
    _option('eta', 'SCM smoothing coefficient.'),
    _option('gamma', 'FCP weight floor.'),
    _option('n_taps', 'FCP filter taps.'),
    _option('align_taps', 'Alignment filter taps.'),
    _option('stride', 'Steps skipped per sampling iteration.'),
    _option('denoiser', 'oracle:<wav>[,...] | gaussian:<variance> | '
                        'extern:<command>'),
    _option('grad_mode', 'detached | vjp'),
    _option('through_fcp', 'Differentiate through the ATF estimate.'),
    _option('jobs', 'Worker threads.'),
]

scene_only_options = [
    _option('n_channels', 'Microphones.'),
    _option('n_sources', 'Sources.'),
    _option('scene_taps', 'True ATF taps.'),
    _option('noise', 'white | fixed | diffuse'),
    _option('noise_param', 'White noise variance or diffuse decay rate.'),
    _option('snr_db', 'Mixture SNR in dB (inf: no noise).'),
    _option('pseudo_sisdr_db', 'SI-SDR of the fabricated estimates.'),
    _option('duration_s', 'Scene length in seconds.'),
]

refine_options = analysis_options + refine_only_options
scene_options = analysis_options + scene_only_options


def known_keys():
    return set(k.lower() for k in current_app.config if k.isupper())


def resolve_config(form_class, flags, config_path=None):
    """Class defaults <- config file <- flags, validated by ``form_class``."""
    names = list(form_class()._fields)
    values = collections.OrderedDict(
        (name, keyvalue.format_value(current_app.config[name.upper()]))
        for name in names)
    if config_path:
        try:
            entries = keyvalue.load(config_path)
        except (IOError, OSError) as exc:
            raise IOError('cannot read {}: {}'.format(
                config_path, getattr(exc, 'strerror', None) or exc))
        valid = known_keys()
        for key, value in entries.items():
            name = key.lower()
            if name not in valid:
                raise ConfigurationError('--config: unknown key {!r} in '
                                         '{}'.format(key, config_path))
            if name in values:
                values[name] = value
    for name, value in flags.items():
        if value is not None and name in values:
            values[name] = value

    form = form_class(formdata=MultiDict(values))
    if not form.validate():
        name, messages = next(iter(form.errors.items()))
        raise ConfigurationError('{}: {}'.format(flag(name), messages[0]))
    return collections.OrderedDict((name, form.data[name]) for name in names)


def echo_config(data):
    click.echo('# resolved configuration', err=True)
    for key, value in data.items():
        click.echo('{}={}'.format(key, keyvalue.format_value(value)),
                   err=True)


def schedule(data):
    return make_schedule(data['diffusion_steps'], data['beta_start'],
                         data['beta_end'])


def fcp_config(data):
    return FcpConfig(n_taps=data['n_taps'], gamma=data['gamma'],
                     causal_offset=data['causal_offset'], ridge=data['ridge'])


def guidance_config(data):
    return GuidanceConfig(xi=data['xi'], grad_mode=data['grad_mode'],
                          eps_mag=data['eps_mag'],
                          differentiate_through_fcp=data['through_fcp'])


def refine_config(data):
    return RefineConfig(
        t_start=data['t_start'], xi=data['xi'], alpha_interp=data['alpha'],
        eta=data['eta'], fcp=fcp_config(data), align_taps=data['align_taps'],
        align_ridge=data['align_ridge'], seed=data['seed'],
        grad_mode=data['grad_mode'], stride=data['stride'],
        differentiate_through_fcp=data['through_fcp'],
        eps_mag=data['eps_mag'], load_delta=data['load_delta'])


def scene_spec(data, sample_rate=None):
    return SceneSpec(
        n_channels=data['n_channels'], n_sources=data['n_sources'],
        n_taps=data['scene_taps'], noise_kind=data['noise'],
        noise_param=data['noise_param'], snr_db=data['snr_db'],
        seed=data['seed'], duration_s=data['duration_s'],
        sample_rate=sample_rate or data['sample_rate'],
        fft_size=data['fft_size'], hop=data['hop'],
        pseudo_sisdr_db=data['pseudo_sisdr_db'])


def split_paths(text):
    return [p.strip() for p in text.split(',') if p.strip()]


def read_sources(paths, n_samples, sample_rate, pad=False, trim=False):
    """Mono waveforms (channel 0) fitted to ``n_samples``."""
    waves = []
    for path in paths:
        data, rate = audio.read_wav(path)
        if rate != sample_rate:
            raise InvalidInput('{}: sample rate {} differs from {}'.format(
                path, rate, sample_rate))
        wave = audio.fit_length(data[0], n_samples, pad, trim)
        if wave is None:
            raise InvalidInput('{}: {} samples, expected {} (use --pad or '
                               '--trim)'.format(path, data.shape[1],
                                                n_samples))
        waves.append(wave)
    return waves


def build_denoisers(spec, n_sources, sched, analysis=None, truth=None,
                    scale=1.0, pad=False, trim=False):
    """One denoiser per source from a ``--denoiser`` value.

    ``analysis`` holds fft_size, hop, sample_rate and n_samples for oracle
    files; ``truth`` are compressed clean spectrograms used by a bare
    ``oracle``.
    """
    kind, _, arg = spec.partition(':')
    if kind == 'gaussian':
        return [GaussianPriorDenoiser(float(arg), sched)] * n_sources
    if kind == 'extern':
        denoisers = []
        try:
            for _ in range(n_sources):
                denoisers.append(ExternalDenoiser(
                    arg, pad_frames=current_app.config['DENOISER_PAD_FRAMES'],
                    timeout=current_app.config['DENOISER_TIMEOUT']))
        except Exception:
            for d in denoisers:
                d.close()
            raise
        return denoisers
    if kind != 'oracle':
        raise ConfigurationError('--denoiser: unknown kind {!r}'.format(kind))

    if arg:
        paths = split_paths(arg)
        if len(paths) != n_sources:
            raise ConfigurationError(
                '--denoiser: oracle needs {} files, got {}'.format(
                    n_sources, len(paths)))
        waves = read_sources(paths, analysis['n_samples'],
                             analysis['sample_rate'], pad, trim)
        truth = [compress(stft(scale * w, analysis['fft_size'],
                               analysis['hop'], analysis['sample_rate']))
                 for w in waves]
    if truth is None:
        raise ConfigurationError('--denoiser: oracle needs clean reference '
                                 'files (oracle:<wav>[,...])')
    return [OracleDenoiser(x, sched) for x in truth]
