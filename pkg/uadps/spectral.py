# coding=utf-8
"""STFT analysis/synthesis and the compressive transform pair.

Spectrograms are stored frequency-major (F x L). By default the DC row is
split off into ``Spectrogram.dc`` so the diffusion signal space never sees it,
and ``istft`` puts it back for a lossless round trip.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .exceptions import InvalidInput

EPS_MAG = 1e-8


def sqrt_hann(fft_size):
    return np.sqrt(get_window('hann', fft_size, fftbins=True))


def _check_finite(data, what):
    if not np.all(np.isfinite(data)):
        raise InvalidInput('{} contains non-finite values'.format(what))


class Spectrogram(object):
    def __init__(self, data, fft_size, hop, sample_rate=16000, dc=None,
                 length=None):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 2:
            raise InvalidInput('spectrogram data must be F x L')
        if data.shape[0] not in (fft_size // 2, fft_size // 2 + 1):
            raise InvalidInput('{} bins do not match fft size {}'.format(
                data.shape[0], fft_size))
        _check_finite(data, 'spectrogram')
        if dc is not None:
            dc = np.asarray(dc, dtype=complex)
            if dc.shape != (data.shape[1],):
                raise InvalidInput('dc row must have one value per frame')
        self.data = data
        self.fft_size = fft_size
        self.hop = hop
        self.sample_rate = sample_rate
        self.dc = dc
        self.length = length

    @property
    def keep_dc(self):
        return self.data.shape[0] == self.fft_size // 2 + 1

    @property
    def shape(self):
        return self.data.shape

    @property
    def n_freqs(self):
        return self.data.shape[0]

    @property
    def n_frames(self):
        return self.data.shape[1]

    def with_data(self, data):
        """Same framing, DC row and length, new coefficients."""
        return Spectrogram(data, self.fft_size, self.hop, self.sample_rate,
                           dc=self.dc, length=self.length)

    def check_compatible(self, other):
        if self.shape != other.shape[-2:] or self.fft_size != other.fft_size \
                or self.hop != other.hop:
            raise InvalidInput(
                'spectrogram dimensions differ: {} vs {}'.format(
                    self.shape, other.shape))


class MultiSpectrogram(object):
    """C channels of identically framed spectrograms, stored C x F x L."""

    def __init__(self, data, fft_size, hop, sample_rate=16000, dc=None,
                 length=None):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 3 or data.shape[0] < 1:
            raise InvalidInput('multichannel data must be C x F x L, C >= 1')
        if data.shape[1] not in (fft_size // 2, fft_size // 2 + 1):
            raise InvalidInput('{} bins do not match fft size {}'.format(
                data.shape[1], fft_size))
        _check_finite(data, 'multichannel spectrogram')
        self.data = data
        self.fft_size = fft_size
        self.hop = hop
        self.sample_rate = sample_rate
        self.dc = None if dc is None else np.asarray(dc, dtype=complex)
        self.length = length

    @classmethod
    def from_channels(cls, channels):
        if not channels:
            raise InvalidInput('at least one channel is required')
        first = channels[0]
        for spec in channels[1:]:
            first.check_compatible(spec)
        dc = None
        if all(spec.dc is not None for spec in channels):
            dc = np.stack([spec.dc for spec in channels])
        return cls(np.stack([spec.data for spec in channels]),
                   first.fft_size, first.hop, first.sample_rate, dc=dc,
                   length=first.length)

    @property
    def shape(self):
        return self.data.shape

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def channels(self):
        return [self.channel(c) for c in range(self.n_channels)]

    def channel(self, c):
        return Spectrogram(self.data[c], self.fft_size, self.hop,
                           self.sample_rate,
                           dc=None if self.dc is None else self.dc[c],
                           length=self.length)

    def with_data(self, data):
        return MultiSpectrogram(data, self.fft_size, self.hop,
                                self.sample_rate, dc=self.dc,
                                length=self.length)

    def check_compatible(self, other):
        if self.shape[-2:] != other.shape[-2:] \
                or self.fft_size != other.fft_size or self.hop != other.hop:
            raise InvalidInput(
                'spectrogram dimensions differ: {} vs {}'.format(
                    self.shape, other.shape))


def stft(signal, fft_size=512, hop=128, sample_rate=16000, keep_dc=False):
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInput('stft expects a non-empty 1-D signal')
    _check_finite(x, 'signal')
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise InvalidInput('fft size must be a power of two')
    if not 0 < hop <= fft_size:
        raise InvalidInput('hop must be in (0, fft_size]')
    if x.size < fft_size:
        raise InvalidInput('signal shorter than one frame')

    n_frames = int(np.ceil((x.size - fft_size) / float(hop))) + 1
    padded = np.zeros((n_frames - 1) * hop + fft_size)
    padded[:x.size] = x
    frames = sliding_window_view(padded, fft_size)[::hop]
    full = np.fft.rfft(frames * sqrt_hann(fft_size), axis=-1).T
    if keep_dc:
        return Spectrogram(full, fft_size, hop, sample_rate, length=x.size)
    return Spectrogram(full[1:], fft_size, hop, sample_rate, dc=full[0],
                       length=x.size)


def istft(spec, out_len=None):
    n = spec.fft_size
    max_len = (spec.n_frames - 1) * spec.hop + n
    if out_len is None:
        out_len = spec.length or max_len
    if out_len <= 0:
        raise InvalidInput('output length must be positive')
    if out_len > max_len:
        raise InvalidInput('output length {} exceeds {} samples'.format(
            out_len, max_len))

    if spec.keep_dc:
        full = spec.data
    else:
        dc = spec.dc if spec.dc is not None else np.zeros(spec.n_frames)
        full = np.vstack([dc[None, :], spec.data])
    window = sqrt_hann(n)
    frames = np.fft.irfft(full.T, n=n, axis=-1) * window

    index = spec.hop * np.arange(spec.n_frames)[:, None] + np.arange(n)
    out = np.zeros(max_len)
    norm = np.zeros(max_len)
    np.add.at(out, index, frames)
    np.add.at(norm, index, np.broadcast_to(window ** 2, frames.shape))
    valid = norm > 1e-8 * norm.max()
    out[valid] /= norm[valid]
    out[~valid] = 0.0
    return out[:out_len]


def stft_multi(signals, fft_size=512, hop=128, sample_rate=16000):
    """Channels-first signals (C x samples) to a MultiSpectrogram."""
    signals = np.atleast_2d(np.asarray(signals, dtype=float))
    return MultiSpectrogram.from_channels(
        [stft(x, fft_size, hop, sample_rate) for x in signals])


def istft_multi(mspec, out_len=None):
    return np.stack([istft(spec, out_len) for spec in mspec.channels])


def compress(spec):
    x = spec.data
    mag = np.abs(x)
    out = np.zeros_like(x)
    nonzero = mag > 0
    out[nonzero] = x[nonzero] / np.sqrt(mag[nonzero])
    return spec.with_data(out)


def decompress(spec):
    x = spec.data
    return spec.with_data(np.abs(x) * x)


def decompress_vjp(at, cotangent, eps_mag=EPS_MAG):
    """Pull a real-parameterised gradient back through ``decompress``.

    Gradients are packed as complex numbers d/dRe + 1j d/dIm. The Jacobian of
    z -> |z| z is r*I + z z^T / r on (Re, Im), which is symmetric.
    """
    if not eps_mag > 0:
        raise InvalidInput('eps_mag must be positive')
    at.check_compatible(cotangent)
    z = at.data
    g = cotangent.data
    r = np.maximum(np.abs(z), eps_mag)
    projection = (z.real * g.real + z.imag * g.imag) / r
    return at.with_data(r * g + z * projection)
