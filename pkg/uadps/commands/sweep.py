# coding=utf-8
import collections
import concurrent.futures
import contextlib
import dataclasses
import io
import os

import click
import numpy as np
from flask import current_app

from . import commands
from .common import analysis_options, build_denoisers, echo_config, \
    options, read_sources, refine_config, refine_only_options, \
    resolve_config, schedule, scene_only_options, scene_spec, split_paths
from .errors import EXIT_OK, exit_codes
from .. import audio, keyvalue, pipeline
from ..exceptions import ConfigurationError
from ..forms import SweepForm, number_list
from ..harness import make_scene, matched_si_sdr
from ..spectral import compress, istft, stft, stft_multi

grid_options = [
    click.option('--xi-grid', 'xi_grid', default=None,
                 help='Comma separated guidance scales.'),
    click.option('--t-grid', 't_grid', default=None,
                 help='Comma separated starting steps.'),
    click.option('--alpha-grid', 'alpha_grid', default=None,
                 help='Comma separated interpolation weights.'),
]


def _mean_si_sdr(spectrograms, references, n_samples):
    _, scores = matched_si_sdr([istft(x, out_len=n_samples)
                                for x in spectrograms], references)
    return float(np.mean(scores))


@commands.cli.command('sweep')
@click.option('--mixture', default=None,
              help='Mixture WAV; a synthetic scene is used when omitted.')
@click.option('--estimates', default=None,
              help='Comma separated estimate WAVs.')
@click.option('--reference', default=None,
              help='Comma separated clean references.')
@click.option('--out-dir', default=None, help='Directory for sweep.txt.')
@click.option('--pad', is_flag=True, help='Zero pad short inputs.')
@click.option('--trim', is_flag=True, help='Cut long inputs.')
@options(*grid_options)
@options(*analysis_options + refine_only_options + scene_only_options)
@exit_codes
def sweep(mixture, estimates, reference, out_dir, pad, trim, config_path,
          **flags):
    """Refine over a grid of guidance scales, starting steps and
    interpolation weights; one metrics row per cell."""
    data = resolve_config(SweepForm, flags, config_path)
    echo_config(data)

    if mixture:
        if not estimates or not reference:
            raise ConfigurationError('--reference: a file sweep needs '
                                     '--estimates and --reference')
        mix, sample_rate = audio.read_wav(mixture)
        n_samples = mix.shape[1]
        waves = read_sources(split_paths(estimates), n_samples, sample_rate,
                             pad, trim)
        references = read_sources(split_paths(reference), n_samples,
                                  sample_rate, pad, trim)
        mixture_spec = stft_multi(mix, data['fft_size'], data['hop'],
                                  sample_rate)
        discriminative = [stft(w, data['fft_size'], data['hop'], sample_rate)
                          for w in waves]
        analysis = dict(fft_size=data['fft_size'], hop=data['hop'],
                        sample_rate=sample_rate, n_samples=n_samples)
        truth = None
    else:
        scene = make_scene(scene_spec(data))
        n_samples = scene.spec.n_samples
        references = scene.clean_waveforms()
        mixture_spec = scene.mixture
        discriminative = scene.pseudo_discriminative
        analysis = None
        truth = [compress(x) for x in scene.clean]

    sched = schedule(data)
    base = refine_config(data)
    alphas = number_list(data['alpha_grid'])
    cells = [(xi, int(t)) for xi in number_list(data['xi_grid'])
             for t in number_list(data['t_grid'])]
    baseline = _mean_si_sdr(discriminative, references, n_samples)
    app = current_app._get_current_object()

    def run_cell(cell):
        xi, t_start = cell
        cfg = dataclasses.replace(base, xi=xi, t_start=t_start)
        with app.app_context(), contextlib.ExitStack() as stack:
            denoisers = build_denoisers(data['denoiser'], len(discriminative),
                                        sched, analysis=analysis, truth=truth,
                                        pad=pad, trim=trim)
            for d in set(denoisers):
                stack.enter_context(d)
            result = pipeline.refine(mixture_spec, discriminative, denoisers,
                                     cfg, sched)
        rows = []
        for alpha in alphas:
            refined = pipeline.interpolate(discriminative, result.aligned,
                                           alpha)
            rows.append(collections.OrderedDict([
                ('xi', xi), ('t_start', t_start), ('alpha', alpha),
                ('si_sdr_db', _mean_si_sdr(refined, references, n_samples)),
                ('input_si_sdr_db', baseline),
                ('final_quadratic', result.final_quadratic)]))
        return rows

    lines = []
    with concurrent.futures.ThreadPoolExecutor(
            max_workers=data['jobs']) as executor:
        for rows in executor.map(run_cell, cells):
            for row in rows:
                line = keyvalue.format_record(row)
                lines.append(line)
                click.echo(line)

    if out_dir:
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
        with io.open(os.path.join(out_dir, 'sweep.txt'), 'w',
                     encoding='utf-8') as f:
            for key, value in data.items():
                f.write(u'# {}={}\n'.format(key,
                                            keyvalue.format_value(value)))
            for line in lines:
                f.write(line + u'\n')
    return EXIT_OK
