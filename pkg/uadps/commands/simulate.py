# coding=utf-8
import click

from . import commands
from .common import echo_config, options, resolve_config, scene_options, \
    scene_spec
from .errors import EXIT_OK, exit_codes
from ..forms import SceneForm
from ..harness import dump_scene, make_scene


@commands.cli.command('simulate')
@click.option('--out-dir', required=True, help='Scene directory.')
@click.option('--subtype', type=click.Choice(['FLOAT', 'PCM_16']),
              default='FLOAT', help='WAV sample format.')
@options(*scene_options)
@exit_codes
def simulate(out_dir, subtype, config_path, **flags):
    """Write a synthetic scene: mixture, clean sources, fabricated
    estimates and a manifest."""
    data = resolve_config(SceneForm, flags, config_path)
    echo_config(data)
    manifest = dump_scene(make_scene(scene_spec(data)), out_dir, subtype)
    click.echo(manifest)
    return EXIT_OK
