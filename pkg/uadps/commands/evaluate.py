# coding=utf-8
import collections

import click
import numpy as np

from . import commands
from .common import split_paths
from .errors import EXIT_OK, exit_codes
from .. import audio, keyvalue, reports
from ..exceptions import InvalidInput
from ..harness import matched_si_sdr

Row = collections.namedtuple('Row', 'source estimate reference si_sdr_db')


@commands.cli.command('evaluate')
@click.option('--estimates', required=True,
              help='Comma separated estimate WAVs.')
@click.option('--reference', required=True,
              help='Comma separated reference WAVs.')
@click.option('--match/--no-match', default=True,
              help='Match estimates to references by permutation.')
@click.option('--records', is_flag=True,
              help='Also print one key=value record per source.')
@click.option('--pad', is_flag=True, help='Zero pad short estimates.')
@click.option('--trim', is_flag=True, help='Cut long estimates.')
@exit_codes
def evaluate(estimates, reference, match, records, pad, trim):
    """SI-SDR of estimates against clean references."""
    estimate_paths = split_paths(estimates)
    reference_paths = split_paths(reference)
    if len(estimate_paths) != len(reference_paths):
        raise InvalidInput('--estimates: {} files for {} references'.format(
            len(estimate_paths), len(reference_paths)))

    refs = []
    for path in reference_paths:
        data, _ = audio.read_wav(path)
        refs.append(data[0])
    n_samples = refs[0].size
    waves = []
    for path in estimate_paths:
        data, _ = audio.read_wav(path)
        wave = audio.fit_length(data[0], n_samples, pad, trim)
        if wave is None:
            raise InvalidInput('{}: {} samples, reference has {} (use --pad '
                               'or --trim)'.format(path, data.shape[1],
                                                   n_samples))
        waves.append(wave)

    perm, scores = matched_si_sdr(waves, refs, match=match)
    rows = [Row(k, estimate_paths[p], reference_paths[k], score)
            for k, (p, score) in enumerate(zip(perm, scores))]
    mean = float(np.mean(scores))
    click.echo(reports.render_evaluation(rows, mean))
    if records:
        for row in rows:
            click.echo('si_sdr ' + keyvalue.format_record(row._asdict()))
        click.echo('si_sdr_mean ' + keyvalue.format_record(
            collections.OrderedDict(n=len(rows), si_sdr_db=mean)))
    return EXIT_OK
