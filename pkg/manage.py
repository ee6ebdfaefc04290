# coding=utf-8
import os
import sys

import click
from flask.cli import FlaskGroup

from uadps import create_app, keyvalue

if os.path.exists('.env'):
    click.echo('Importing environment from .env...', err=True)
    for key, value in keyvalue.load('.env').items():
        os.environ.setdefault(key, value)


def make_app(*args):
    return create_app(os.getenv('UADPS_CONFIG') or 'default')


cli = FlaskGroup(create_app=make_app, add_default_commands=False,
                 help='Refine multichannel source estimates.')


@cli.command()
@click.option('--pattern', default='test*.py', help='Test file pattern.')
def test(pattern):
    """Run the unit tests."""
    import unittest

    tests = unittest.TestLoader().discover('tests', pattern=pattern)
    result = unittest.TextTestRunner(verbosity=2).run(tests)
    sys.exit(0 if result.wasSuccessful() else 1)


if __name__ == '__main__':
    cli()
