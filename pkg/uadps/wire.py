# coding=utf-8
"""Binary frames exchanged with an external denoiser process.

Request:  b'UADN', version, t, F, L (u32 little endian), then F*L pairs of
          float32 (real, imag), frequency-major.
Response: b'UADR', version, F, L, then the same payload layout.
"""
import struct

import numpy as np

from .exceptions import DenoiserProtocolError

VERSION = 1
REQUEST_MAGIC = b'UADN'
RESPONSE_MAGIC = b'UADR'
REQUEST_HEADER = struct.Struct('<4sIIII')
RESPONSE_HEADER = struct.Struct('<4sIII')


def payload_size(n_freqs, n_frames):
    return n_freqs * n_frames * 8


def encode_payload(data):
    pairs = np.empty(data.shape + (2,), dtype='<f4')
    pairs[..., 0] = data.real
    pairs[..., 1] = data.imag
    return pairs.tobytes()


def decode_payload(buf, n_freqs, n_frames):
    expected = payload_size(n_freqs, n_frames)
    if len(buf) != expected:
        raise DenoiserProtocolError('truncated payload', expected=expected,
                                    received=len(buf))
    pairs = np.frombuffer(buf, dtype='<f4').reshape(n_freqs, n_frames, 2)
    return pairs[..., 0].astype(float) + 1j * pairs[..., 1].astype(float)


def encode_request(t, data):
    n_freqs, n_frames = data.shape
    return REQUEST_HEADER.pack(REQUEST_MAGIC, VERSION, t, n_freqs,
                               n_frames) + encode_payload(data)


def encode_response(data):
    n_freqs, n_frames = data.shape
    return RESPONSE_HEADER.pack(RESPONSE_MAGIC, VERSION, n_freqs,
                                n_frames) + encode_payload(data)


def _check_header(magic, version, expected_magic, raw):
    if magic != expected_magic:
        raise DenoiserProtocolError('bad magic', expected=expected_magic,
                                    received=magic, header=raw.hex())
    if version != VERSION:
        raise DenoiserProtocolError('unsupported version',
                                    expected=VERSION, received=version)


def parse_request_header(raw):
    if len(raw) != REQUEST_HEADER.size:
        raise DenoiserProtocolError('truncated request header',
                                    expected=REQUEST_HEADER.size,
                                    received=len(raw))
    magic, version, t, n_freqs, n_frames = REQUEST_HEADER.unpack(raw)
    _check_header(magic, version, REQUEST_MAGIC, raw)
    return t, n_freqs, n_frames


def parse_response_header(raw):
    if len(raw) != RESPONSE_HEADER.size:
        raise DenoiserProtocolError('truncated response header',
                                    expected=RESPONSE_HEADER.size,
                                    received=len(raw))
    magic, version, n_freqs, n_frames = RESPONSE_HEADER.unpack(raw)
    _check_header(magic, version, RESPONSE_MAGIC, raw)
    return n_freqs, n_frames


def serve(handler, instream, outstream):
    """Answer requests until the input closes; handler(t, data) -> data."""
    while True:
        raw = instream.read(REQUEST_HEADER.size)
        if not raw:
            return
        t, n_freqs, n_frames = parse_request_header(raw)
        data = decode_payload(instream.read(payload_size(n_freqs, n_frames)),
                              n_freqs, n_frames)
        outstream.write(encode_response(handler(t, data)))
        outstream.flush()
