# coding=utf-8
import contextlib
import os

import click

from . import commands
from .common import build_denoisers, echo_config, options, read_sources, \
    refine_config, refine_options, resolve_config, schedule, split_paths
from .errors import EXIT_OK, exit_codes
from .. import audio, pipeline, reports
from ..exceptions import InvalidInput
from ..forms import RefineForm
from ..harness import si_sdr
from ..spectral import istft, stft, stft_multi


@commands.cli.command('refine')
@click.option('--mixture', required=True, help='Multichannel mixture WAV.')
@click.option('--estimates', required=True,
              help='Comma separated single-channel estimate WAVs.')
@click.option('--reference', default=None,
              help='Comma separated clean references, for SI-SDR.')
@click.option('--out-dir', required=True, help='Output directory.')
@click.option('--pad', is_flag=True, help='Zero pad short estimates.')
@click.option('--trim', is_flag=True, help='Cut long estimates.')
@click.option('--normalize', is_flag=True,
              help='Peak normalise inputs, undo on output.')
@options(*refine_options)
@exit_codes
def refine(mixture, estimates, reference, out_dir, pad, trim, normalize,
           config_path, **flags):
    """Refine source estimates of a multichannel mixture."""
    data = resolve_config(RefineForm, flags, config_path)
    echo_config(data)

    mix, sample_rate = audio.read_wav(mixture)
    if mix.shape[0] < 2:
        raise InvalidInput('{}: need at least 2 channels, got {}'.format(
            mixture, mix.shape[0]))
    n_samples = mix.shape[1]
    estimate_paths = split_paths(estimates)
    waves = read_sources(estimate_paths, n_samples, sample_rate, pad, trim)
    references = None
    if reference:
        references = read_sources(split_paths(reference), n_samples,
                                  sample_rate, pad, trim)
        if len(references) != len(waves):
            raise InvalidInput('--reference: need {} files, got {}'.format(
                len(waves), len(references)))
    scale = audio.peak_scale(mix, *waves) if normalize else 1.0

    analysis = dict(fft_size=data['fft_size'], hop=data['hop'],
                    sample_rate=sample_rate, n_samples=n_samples)
    mixture_spec = stft_multi(scale * mix, data['fft_size'], data['hop'],
                              sample_rate)
    discriminative = [stft(scale * w, data['fft_size'], data['hop'],
                           sample_rate) for w in waves]
    sched = schedule(data)
    with contextlib.ExitStack() as stack:
        denoisers = build_denoisers(data['denoiser'], len(waves), sched,
                                    analysis=analysis, scale=scale, pad=pad,
                                    trim=trim)
        for d in set(denoisers):
            stack.enter_context(d)
        result = pipeline.refine(mixture_spec, discriminative, denoisers,
                                 refine_config(data), sched)

    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    summaries = []
    for k, spec in enumerate(result.refined):
        wave = istft(spec, out_len=n_samples) / scale
        path = os.path.join(out_dir, 'refined_{}.wav'.format(k))
        audio.write_wav(path, wave, sample_rate)
        input_sdr = output_sdr = None
        if references is not None:
            input_sdr = si_sdr(waves[k], references[k])
            output_sdr = si_sdr(wave, references[k])
        summaries.append(reports.SourceSummary(estimate_paths[k], path,
                                               input_sdr, output_sdr))
        click.echo(path)
    reports.write_refine_reports(out_dir, data, mixture, mix.shape[0],
                                 summaries, result.reports,
                                 result.final_quadratic)
    return EXIT_OK
