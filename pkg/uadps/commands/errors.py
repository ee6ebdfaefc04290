# coding=utf-8
import functools

import click

from ..exceptions import CapabilityError, ConfigurationError, \
    DegenerateWeights, DenoiserProtocolError, InvalidInput, UadpsError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_PROTOCOL = 4


def failure(code, status, message):
    click.echo('error: {}: {}'.format(status, message), err=True)
    return code


def check_failed(message):
    return failure(EXIT_FAILED, 'check failed', message)


def runtime_failure(message):
    return failure(EXIT_FAILED, 'runtime failure', message)


def io_error(message):
    return failure(EXIT_IO, 'I/O error', message)


def config_error(message):
    return failure(EXIT_CONFIG, 'configuration error', message)


def protocol_error(message):
    return failure(EXIT_PROTOCOL, 'denoiser protocol error', message)


def exit_codes(f):
    """Turn the command's return value or exception into its exit code."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            code = f(*args, **kwargs)
        except DenoiserProtocolError as exc:
            code = protocol_error(str(exc))
        except (ConfigurationError, InvalidInput, CapabilityError,
                DegenerateWeights) as exc:
            code = config_error(str(exc))
        except (IOError, OSError) as exc:
            code = io_error(str(exc))
        except UadpsError as exc:
            code = runtime_failure(str(exc))
        click.get_current_context().exit(code or EXIT_OK)

    return wrapper
