# coding=utf-8
"""Noise estimators eps_hat(x_t, t) for the compressive-domain prior.

``vjp`` pulls a real-parameterised cotangent on eps_hat back to x_t
(gradients packed as d/dRe + 1j d/dIm).
"""
import logging
import os
import select
import shlex
import subprocess
import time

import numpy as np

from . import wire
from .exceptions import CapabilityError, DenoiserProtocolError, InvalidInput

logger = logging.getLogger(__name__)


class Denoiser(object):
    has_vjp = False

    def estimate_noise(self, x_t, t):
        raise NotImplementedError

    def vjp(self, x_t, t, cotangent):
        raise CapabilityError(
            '{} exposes no Jacobian'.format(type(self).__name__))

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class OracleDenoiser(Denoiser):
    """Inverts the forward noising around a known clean signal."""
    has_vjp = True

    def __init__(self, x0_truth, sched):
        self.x0_truth = x0_truth
        self.sched = sched

    def _noise_scale(self, t):
        return np.sqrt(1.0 - self.sched.alpha_bar_at(t))

    def estimate_noise(self, x_t, t):
        x_t.check_compatible(self.x0_truth)
        scale = self._noise_scale(t)
        if scale == 0:
            return x_t.with_data(np.zeros(x_t.shape, dtype=complex))
        alpha_bar = self.sched.alpha_bar_at(t)
        return x_t.with_data(
            (x_t.data - np.sqrt(alpha_bar) * self.x0_truth.data) / scale)

    def vjp(self, x_t, t, cotangent):
        scale = self._noise_scale(t)
        if scale == 0:
            return cotangent.with_data(np.zeros(cotangent.shape,
                                                dtype=complex))
        return cotangent.with_data(cotangent.data / scale)


class GaussianPriorDenoiser(Denoiser):
    """Exact MMSE denoiser for a zero-mean circular Gaussian prior.

    ``bin_variance`` is the per-component (real or imaginary) prior
    variance, scalar or F x L; ``np.inf`` disables shrinkage.
    """
    has_vjp = True

    def __init__(self, bin_variance, sched):
        variance = np.asarray(bin_variance, dtype=float)
        if np.any(np.isnan(variance)) or np.any(variance < 0):
            raise InvalidInput('prior variance must be >= 0')
        self.variance = variance
        self.sched = sched

    def gain(self, t):
        alpha_bar = self.sched.alpha_bar_at(t)
        with np.errstate(divide='ignore'):
            return np.sqrt(alpha_bar) / (
                alpha_bar + (1.0 - alpha_bar) / self.variance)

    def _noise_gain(self, t):
        alpha_bar = self.sched.alpha_bar_at(t)
        return (1.0 - np.sqrt(alpha_bar) * self.gain(t)) \
            / np.sqrt(1.0 - alpha_bar)

    def posterior_mean(self, x_t, t):
        return x_t.with_data(self.gain(t) * x_t.data)

    def estimate_noise(self, x_t, t):
        self.sched.check_step(t)
        return x_t.with_data(self._noise_gain(t) * x_t.data)

    def vjp(self, x_t, t, cotangent):
        return cotangent.with_data(self._noise_gain(t) * cotangent.data)


class ConstantDenoiser(Denoiser):
    """Returns the same eps_hat for every input; its Jacobian is zero."""
    has_vjp = True

    def __init__(self, eps_hat):
        self.eps_hat = eps_hat

    def estimate_noise(self, x_t, t):
        x_t.check_compatible(self.eps_hat)
        return x_t.with_data(self.eps_hat.data)

    def vjp(self, x_t, t, cotangent):
        return cotangent.with_data(np.zeros(cotangent.shape, dtype=complex))


class ExternalDenoiser(Denoiser):
    """Child process speaking the ``uadps.wire`` protocol on stdin/stdout.

    With ``pad_frames`` > 0 the frame axis is zero padded to a multiple of
    it before each request and the response is cropped back.
    """

    def __init__(self, command, pad_frames=0, timeout=5.0, cwd=None,
                 env=None):
        self.command = command
        self.pad_frames = pad_frames
        self.timeout = timeout
        self._broken = False
        try:
            self._proc = subprocess.Popen(
                shlex.split(command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, cwd=cwd, env=env)
        except OSError as exc:
            raise DenoiserProtocolError('cannot start denoiser',
                                        command=command, error=exc)
        os.set_blocking(self._proc.stdin.fileno(), False)
        logger.info('started denoiser pid %d: %s', self._proc.pid, command)

    def _deadline_left(self, deadline, what, **diagnostics):
        left = deadline - time.monotonic()
        if left <= 0:
            raise DenoiserProtocolError('timed out ' + what,
                                        timeout=self.timeout, **diagnostics)
        return left

    def _write(self, buf):
        fd = self._proc.stdin.fileno()
        view = memoryview(buf)
        deadline = time.monotonic() + self.timeout
        sent = 0
        while sent < len(view):
            left = self._deadline_left(deadline, 'writing request',
                                       expected=len(view), sent=sent)
            _, writable, _ = select.select([], [fd], [], left)
            if not writable:
                continue
            try:
                sent += os.write(fd, view[sent:sent + 65536])
            except BlockingIOError:
                continue
            except (BrokenPipeError, OSError):
                raise DenoiserProtocolError(
                    'denoiser closed its input',
                    returncode=self._proc.poll(), sent=sent,
                    expected=len(view))

    def _read(self, n):
        fd = self._proc.stdout.fileno()
        chunks = []
        received = 0
        deadline = time.monotonic() + self.timeout
        while received < n:
            left = self._deadline_left(deadline, 'reading response',
                                       expected=n, received=received)
            readable, _, _ = select.select([fd], [], [], left)
            if not readable:
                continue
            chunk = os.read(fd, n - received)
            if not chunk:
                raise DenoiserProtocolError(
                    'denoiser closed its output',
                    returncode=self._proc.poll(), expected=n,
                    received=received)
            chunks.append(chunk)
            received += len(chunk)
        return b''.join(chunks)

    def estimate_noise(self, x_t, t):
        try:
            return self._exchange(x_t, t)
        except DenoiserProtocolError:
            # the stream is out of step after any failed exchange
            self._broken = True
            raise

    def _exchange(self, x_t, t):
        data = x_t.data
        n_freqs, n_frames = data.shape
        if self.pad_frames > 0:
            padded = -(-n_frames // self.pad_frames) * self.pad_frames
            data = np.pad(data, ((0, 0), (0, padded - n_frames)))
        self._write(wire.encode_request(t, data))
        got_freqs, got_frames = wire.parse_response_header(
            self._read(wire.RESPONSE_HEADER.size))
        if (got_freqs, got_frames) != data.shape:
            raise DenoiserProtocolError(
                'response dimensions differ from request',
                expected='{}x{}'.format(*data.shape),
                received='{}x{}'.format(got_freqs, got_frames))
        out = wire.decode_payload(
            self._read(wire.payload_size(got_freqs, got_frames)),
            got_freqs, got_frames)
        if not np.all(np.isfinite(out)):
            raise DenoiserProtocolError('non-finite payload', step=t)
        return x_t.with_data(out[:, :n_frames])

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=0 if self._broken else self.timeout)
            except subprocess.TimeoutExpired:
                logger.warning('killing denoiser pid %d', self._proc.pid)
                self._proc.kill()
                self._proc.wait()
        self._proc.stdout.close()


def oracle_denoiser(x0_truth, sched):
    return OracleDenoiser(x0_truth, sched)


def gaussian_prior_denoiser(bin_variance, sched):
    return GaussianPriorDenoiser(bin_variance, sched)


def external_denoiser(command, **kwargs):
    return ExternalDenoiser(command, **kwargs)
