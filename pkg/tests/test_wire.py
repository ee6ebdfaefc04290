# coding=utf-8
import io
import os
import sys
import time
import unittest

import numpy as np

from uadps import wire
from uadps.denoisers import ExternalDenoiser
from uadps.exceptions import DenoiserProtocolError
from uadps.spectral import Spectrogram

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def loopback(mode, **kwargs):
    kwargs.setdefault('cwd', ROOT)
    return ExternalDenoiser('{} -m uadps.loopback {}'.format(
        sys.executable, mode), **kwargs)


def float32_spec(rng, n_freqs=8, n_frames=10):
    data = rng.standard_normal((n_freqs, n_frames, 2)).astype(np.float32)
    return Spectrogram(data[..., 0].astype(float)
                       + 1j * data[..., 1].astype(float), 2 * n_freqs, 4)


class FrameTestCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(31)

    def test_request_layout(self):
        x = float32_spec(self.rng, n_freqs=2, n_frames=3)
        frame = wire.encode_request(7, x.data)
        self.assertTrue(frame[:4] == b'UADN')
        self.assertTrue(len(frame) == wire.REQUEST_HEADER.size + 2 * 3 * 8)
        self.assertTrue(wire.parse_request_header(
            frame[:wire.REQUEST_HEADER.size]) == (7, 2, 3))
        payload = np.frombuffer(frame[wire.REQUEST_HEADER.size:], dtype='<f4')
        # frequency-major, (real, imag) pairs
        self.assertTrue(payload[0] == np.float32(x.data[0, 0].real))
        self.assertTrue(payload[1] == np.float32(x.data[0, 0].imag))
        self.assertTrue(payload[2] == np.float32(x.data[0, 1].real))
        self.assertTrue(np.array_equal(
            wire.decode_payload(frame[wire.REQUEST_HEADER.size:], 2, 3),
            x.data))

    def test_bad_frames(self):
        frame = wire.encode_response(np.zeros((2, 3), dtype=complex))
        header = frame[:wire.RESPONSE_HEADER.size]
        self.assertTrue(wire.parse_response_header(header) == (2, 3))
        with self.assertRaises(DenoiserProtocolError):
            wire.parse_response_header(b'XXXX' + header[4:])
        with self.assertRaises(DenoiserProtocolError):
            wire.parse_response_header(header[:8])
        with self.assertRaises(DenoiserProtocolError):
            wire.parse_response_header(wire.RESPONSE_HEADER.pack(
                wire.RESPONSE_MAGIC, 2, 2, 3))
        with self.assertRaises(DenoiserProtocolError) as ctx:
            wire.decode_payload(frame[wire.RESPONSE_HEADER.size:-1], 2, 3)
        self.assertTrue(ctx.exception.diagnostics['expected'] == 48)
        self.assertTrue(ctx.exception.diagnostics['received'] == 47)

    def test_serve(self):
        x = float32_spec(self.rng)
        requests = io.BytesIO(wire.encode_request(3, x.data)
                              + wire.encode_request(2, 2 * x.data))
        responses = io.BytesIO()
        # powers of two keep the float32 payload exact
        wire.serve(lambda t, data: (t - 1) * data, requests, responses)
        out = responses.getvalue()
        size = wire.RESPONSE_HEADER.size + wire.payload_size(8, 10)
        self.assertTrue(len(out) == 2 * size)
        first = wire.decode_payload(out[wire.RESPONSE_HEADER.size:size], 8, 10)
        self.assertTrue(np.array_equal(first, 2 * x.data))
        second = wire.decode_payload(out[size + wire.RESPONSE_HEADER.size:],
                                     8, 10)
        self.assertTrue(np.array_equal(second, 2 * x.data))


class ExternalDenoiserTestCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(32)
        self.denoiser = None

    def tearDown(self):
        if self.denoiser is not None:
            self.denoiser.close()

    def test_echo_is_bit_exact(self):
        self.denoiser = loopback('echo')
        x = float32_spec(self.rng, n_freqs=16, n_frames=1000)
        out = self.denoiser.estimate_noise(x, 17)
        self.assertTrue(np.array_equal(out.data, x.data))
        self.assertTrue(out.dc is x.dc)
        again = self.denoiser.estimate_noise(x, 16)
        self.assertTrue(np.array_equal(again.data, x.data))

    def test_zeros(self):
        self.denoiser = loopback('zeros')
        out = self.denoiser.estimate_noise(float32_spec(self.rng), 5)
        self.assertFalse(np.any(out.data))
        self.assertFalse(self.denoiser.has_vjp)

    def test_padding(self):
        self.denoiser = loopback('echo', pad_frames=4)
        x = float32_spec(self.rng, n_frames=10)
        out = self.denoiser.estimate_noise(x, 1)
        self.assertTrue(out.shape == (8, 10))
        self.assertTrue(np.array_equal(out.data, x.data))

    def test_bad_dimensions(self):
        self.denoiser = loopback('baddims')
        with self.assertRaises(DenoiserProtocolError) as ctx:
            self.denoiser.estimate_noise(float32_spec(self.rng), 1)
        self.assertTrue('dimensions' in str(ctx.exception))

    def test_bad_magic(self):
        self.denoiser = loopback('badmagic', timeout=2.0)
        with self.assertRaises(DenoiserProtocolError) as ctx:
            self.denoiser.estimate_noise(float32_spec(self.rng), 1)
        self.assertTrue('magic' in str(ctx.exception))

    def test_process_exit(self):
        self.denoiser = loopback('exit')
        with self.assertRaises(DenoiserProtocolError):
            self.denoiser.estimate_noise(float32_spec(self.rng), 1)

    def test_hang_times_out(self):
        start = time.monotonic()
        with self.assertRaises(DenoiserProtocolError) as ctx:
            with loopback('hang', timeout=2.0) as denoiser:
                denoiser.estimate_noise(float32_spec(self.rng), 1)
        self.assertTrue('timed out' in str(ctx.exception))
        # closing after a timeout kills the child without a second wait
        self.assertTrue(time.monotonic() - start < 3.5)
        self.assertTrue(denoiser._proc.returncode is not None)

    def test_cannot_start(self):
        with self.assertRaises(DenoiserProtocolError):
            ExternalDenoiser(os.path.join(ROOT, 'no-such-denoiser'))
