# coding=utf-8
import collections
import contextlib

import click

from . import commands
from .common import analysis_options, build_denoisers, echo_config, \
    fcp_config, guidance_config, options, refine_only_options, \
    resolve_config, schedule, scene_only_options, scene_spec
from .errors import EXIT_OK, check_failed, exit_codes
from .. import keyvalue
from ..diffusion import INIT_STREAM, forward_to_step, substream
from ..forms import CheckGradForm
from ..guidance import finite_diff_check
from ..harness import make_scene
from ..pipeline import prepare_scm
from ..spectral import compress


check_options = [
    click.option('--threshold', 'grad_threshold', default=None,
                 help='Largest accepted relative error.'),
    click.option('--probes', default=None, help='Random coordinates probed.'),
    click.option('--fd-step', default=None, help='Finite difference step.'),
    click.option('--check-step', default=None, help='Diffusion step checked.'),
]


@commands.cli.command('check-grad')
@options(*check_options)
@options(*analysis_options + refine_only_options + scene_only_options)
@exit_codes
def check_grad(config_path, **flags):
    """Compare the likelihood score against finite differences on a
    synthetic scene."""
    data = resolve_config(CheckGradForm, flags, config_path)
    echo_config(data)

    scene = make_scene(scene_spec(data))
    sched = schedule(data)
    fcp_cfg = fcp_config(data)
    t = data['check_step']
    inv_scm, _ = prepare_scm(scene.mixture, scene.pseudo_discriminative,
                             fcp_cfg, data['eta'], data['load_delta'])
    xbar_t = [forward_to_step(compress(x), t, sched,
                              rng=substream(data['seed'], INIT_STREAM, k))
              for k, x in enumerate(scene.pseudo_discriminative)]
    with contextlib.ExitStack() as stack:
        denoisers = build_denoisers(
            data['denoiser'], len(xbar_t), sched,
            truth=[compress(x) for x in scene.clean])
        for d in set(denoisers):
            stack.enter_context(d)
        error = finite_diff_check(
            xbar_t, scene.mixture, inv_scm, sched, t, denoisers, fcp_cfg,
            guidance_config(data), n_probes=data['probes'],
            h=data['fd_step'], seed=data['seed'])

    threshold = data['grad_threshold']
    click.echo(keyvalue.format_record(collections.OrderedDict([
        ('max_rel_error', error), ('threshold', threshold),
        ('probes', data['probes']), ('step', t),
        ('grad_mode', data['grad_mode'])])))
    if not error < threshold:
        return check_failed('max relative error {:.3e} is not below '
                            '{:.3e}'.format(error, threshold))
    return EXIT_OK
