# coding=utf-8
"""Stand-in denoiser servers for exercising the wire protocol.

    python -m uadps.loopback echo      # returns the request payload
    python -m uadps.loopback zeros     # eps_hat = 0
"""
import sys
import time

import click
import numpy as np

from . import wire


def _echo(t, data):
    return data


def _zeros(t, data):
    return np.zeros_like(data)


def _bad_dims(t, data):
    return np.zeros((data.shape[0] + 1, data.shape[1]), dtype=complex)


@click.command()
@click.argument('mode', type=click.Choice(
    ['echo', 'zeros', 'baddims', 'badmagic', 'exit', 'hang']))
def main(mode):
    instream = sys.stdin.buffer
    outstream = sys.stdout.buffer
    if mode in ('echo', 'zeros', 'baddims'):
        handler = {'echo': _echo, 'zeros': _zeros, 'baddims': _bad_dims}[mode]
        wire.serve(handler, instream, outstream)
        return
    # misbehaving servers read one request header, then fail
    instream.read(wire.REQUEST_HEADER.size)
    if mode == 'badmagic':
        outstream.write(b'XXXX' + b'\0' * 12)
        outstream.flush()
        time.sleep(60)
    elif mode == 'hang':
        time.sleep(60)
    sys.exit(1)


if __name__ == '__main__':
    main()
