# coding=utf-8
"""WAV files as channels-first float64 arrays."""
import numpy as np
import soundfile as sf

SUBTYPES = ('FLOAT', 'PCM_16')


def read_wav(path):
    """Returns (C x samples array, sample rate); raises IOError naming the
    path."""
    try:
        data, sample_rate = sf.read(path, dtype='float64', always_2d=True)
    except (RuntimeError, OSError) as exc:
        raise IOError('cannot read {}: {}'.format(path, exc))
    return data.T.copy(), sample_rate


def write_wav(path, data, sample_rate, subtype='FLOAT'):
    if subtype not in SUBTYPES:
        raise ValueError('unsupported WAV subtype {}'.format(subtype))
    data = np.atleast_2d(np.asarray(data, dtype=float))
    try:
        sf.write(path, data.T, sample_rate, subtype=subtype)
    except (RuntimeError, OSError) as exc:
        raise IOError('cannot write {}: {}'.format(path, exc))


def fit_length(data, n_samples, pad=False, trim=False):
    """Zero pad or cut the last axis to ``n_samples``; ``None`` if the
    length differs and the corresponding flag is off."""
    length = data.shape[-1]
    if length == n_samples:
        return data
    if length < n_samples:
        if not pad:
            return None
        widths = [(0, 0)] * (data.ndim - 1) + [(0, n_samples - length)]
        return np.pad(data, widths)
    if not trim:
        return None
    return data[..., :n_samples]


def peak_scale(*signals):
    """Common factor mapping the largest absolute sample to 1."""
    peak = max(np.abs(s).max() for s in signals)
    return 1.0 / peak if peak > 0 else 1.0
