# coding=utf-8
"""Synthetic multichannel scenes and separation metrics.

Scenes are built directly in the STFT filter domain, so the FCP model class
contains the true ATFs. Channel 0 is the reference microphone: its first
tap is exactly 1.
"""
import collections
import dataclasses
import enum
import itertools
import logging
import os

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import audio, keyvalue
from .diffusion import SCENE_STREAM, complex_normal, substream
from .exceptions import InvalidInput
from .fcp import AtfFilter, apply_atf
from .spectral import MultiSpectrogram, istft, istft_multi, stft

logger = logging.getLogger(__name__)

SISDR_CAP = 100.0
DIFFUSE_LOADING = 1e-3
MANIFEST = 'manifest.txt'

# substream keys under SCENE_STREAM
_SOURCE, _ATF, _NOISE, _DEGRADE, _SCM = range(5)


class NoiseKind(enum.Enum):
    WHITE = 'white'
    FIXED = 'fixed'
    DIFFUSE = 'diffuse'


@dataclasses.dataclass(frozen=True)
class SceneSpec(object):
    """``noise_param`` is the per-bin variance for white noise and the
    coherence decay rate for diffuse noise; ``scm`` is the C x C covariance
    of fixed noise (random when omitted). ``snr_db = inf`` disables noise."""
    n_channels: int = 4
    n_sources: int = 1
    n_taps: int = 4
    noise_kind: NoiseKind = NoiseKind.WHITE
    noise_param: float = 1.0
    snr_db: float = 0.0
    seed: int = 0
    duration_s: float = 2.0
    sample_rate: int = 16000
    fft_size: int = 512
    hop: int = 128
    pseudo_sisdr_db: float = 5.0
    scm: tuple = None
    sources: tuple = None

    def __post_init__(self):
        object.__setattr__(self, 'noise_kind', NoiseKind(self.noise_kind))
        if self.n_channels < 1 or self.n_sources < 1:
            raise InvalidInput('need at least one channel and one source')
        if self.n_taps < 1:
            raise InvalidInput('n_taps must be >= 1')
        if np.isnan(self.snr_db) or self.snr_db == -np.inf:
            raise InvalidInput('snr_db must be finite or +inf')
        if np.isnan(self.pseudo_sisdr_db) or self.pseudo_sisdr_db == -np.inf:
            raise InvalidInput('pseudo_sisdr_db must be finite or +inf')
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise InvalidInput('duration and sample rate must be positive')
        if self.n_samples < self.fft_size:
            raise InvalidInput('scene shorter than one STFT frame')
        if not self.noise_param >= 0:
            raise InvalidInput('noise_param must be >= 0')
        if self.sources is not None and len(self.sources) != self.n_sources:
            raise InvalidInput('need one waveform per source')

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.sample_rate))

    def as_record(self):
        record = collections.OrderedDict()
        for field in dataclasses.fields(self):
            if field.name in ('scm', 'sources'):
                continue
            value = getattr(self, field.name)
            record[field.name] = value.value if isinstance(
                value, NoiseKind) else value
        return record

    @classmethod
    def from_record(cls, record):
        kwargs = {}
        for field in dataclasses.fields(cls):
            if field.name not in record:
                continue
            value = record[field.name]
            if field.type is int:
                value = int(value)
            elif field.type is float:
                value = float(value)
            kwargs[field.name] = value
        return cls(**kwargs)


@dataclasses.dataclass
class Scene(object):
    spec: SceneSpec
    mixture: MultiSpectrogram
    clean: list
    true_filters: list
    noise: MultiSpectrogram
    noise_cov: np.ndarray
    pseudo_discriminative: list

    @property
    def reverberant(self):
        return [apply_atf(x, h) for x, h in zip(self.clean, self.true_filters)]

    def clean_waveforms(self):
        return [istft(x) for x in self.clean]

    def pseudo_waveforms(self):
        return [istft(x) for x in self.pseudo_discriminative]

    def mixture_waveform(self):
        return istft_multi(self.mixture)


def speech_like(rng, n_samples, sample_rate):
    """Harmonic tone with vibrato, syllabic amplitude modulation and pauses."""
    t = np.arange(n_samples) / float(sample_rate)
    f0 = rng.uniform(100.0, 220.0)
    vibrato = 1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(2.0, 6.0) * t
                                  + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / sample_rate
    n_harmonics = max(1, int(0.45 * sample_rate / (f0 * 1.05)))
    voiced = np.zeros(n_samples)
    for h in range(1, n_harmonics + 1):
        voiced += np.sin(h * phase + rng.uniform(0, 2 * np.pi)) / h

    syllable_rate = rng.uniform(3.0, 5.0)
    envelope = 0.5 * (1.0 - np.cos(2 * np.pi * syllable_rate * t
                                   + rng.uniform(0, 2 * np.pi)))
    gate = np.ones(n_samples)
    for _ in range(max(1, int(1.5 * n_samples / sample_rate))):
        start = int(rng.integers(n_samples))
        width = int(rng.uniform(0.08, 0.25) * sample_rate)
        gate[start:start + width] = 0.0
    smooth = np.hanning(max(3, int(0.01 * sample_rate)))
    gate = np.convolve(gate, smooth / smooth.sum(), mode='same')

    signal = voiced * envelope * gate
    signal += 0.01 * rng.standard_normal(n_samples) * envelope
    return 0.5 * signal / np.abs(signal).max()


def random_atf(rng, n_channels, n_taps, n_freqs, decay=1.5):
    taps = np.empty((n_channels, n_taps, n_freqs), dtype=complex)
    taps[:, 0, :] = np.exp(1j * rng.uniform(0, 2 * np.pi,
                                            (n_channels, n_freqs)))
    taps[0, 0, :] = 1.0
    for j in range(1, n_taps):
        taps[:, j, :] = 0.5 * np.exp(-j / decay) * complex_normal(
            rng, (n_channels, n_freqs)) / np.sqrt(2)
    return AtfFilter(taps)


def random_scm(rng, n_channels):
    a = complex_normal(rng, (n_channels, n_channels)) / np.sqrt(2)
    cov = a @ np.conj(a.T) + 0.1 * np.eye(n_channels)
    return cov / (np.trace(cov).real / n_channels)


def diffuse_coherence(n_channels, n_freqs, rate):
    """Coherence sinc(rate * |i - j| * f / F) per frequency, lightly loaded."""
    distance = np.abs(np.subtract.outer(np.arange(n_channels),
                                        np.arange(n_channels)))
    freqs = (np.arange(n_freqs) + 1.0) / n_freqs
    gamma = np.sinc(rate * distance[None] * freqs[:, None, None])
    return gamma + DIFFUSE_LOADING * np.eye(n_channels)


def _noise(spec, rng, shape):
    """Unscaled noise C x F x L and its per-frequency covariance F x C x C."""
    n_channels, n_freqs, n_frames = shape
    white = complex_normal(rng, shape) / np.sqrt(2)
    if spec.noise_kind is NoiseKind.WHITE:
        cov = spec.noise_param * np.eye(n_channels)
        return np.sqrt(spec.noise_param) * white, np.broadcast_to(
            cov, (n_freqs, n_channels, n_channels)).astype(complex)
    if spec.noise_kind is NoiseKind.FIXED:
        if spec.scm is None:
            cov = random_scm(substream(spec.seed, SCENE_STREAM, _SCM),
                             n_channels)
        else:
            cov = np.asarray(spec.scm, dtype=complex)
        if cov.shape != (n_channels, n_channels):
            raise InvalidInput('scm must be C x C')
        cov = np.broadcast_to(cov, (n_freqs, n_channels, n_channels))
    else:
        cov = diffuse_coherence(n_channels, n_freqs,
                                spec.noise_param).astype(complex)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidInput('noise covariance is not positive definite')
    return np.einsum('fcd,dfl->cfl', chol, white), np.array(cov)


def make_scene(spec):
    n_samples = spec.n_samples
    clean = []
    for k in range(spec.n_sources):
        if spec.sources is not None:
            wave = np.asarray(spec.sources[k], dtype=float)
            if wave.shape != (n_samples,):
                raise InvalidInput('source {} has {} samples, expected '
                                   '{}'.format(k, wave.size, n_samples))
        else:
            wave = speech_like(substream(spec.seed, SCENE_STREAM, _SOURCE, k),
                               n_samples, spec.sample_rate)
        clean.append(stft(wave, spec.fft_size, spec.hop, spec.sample_rate))

    n_freqs, n_frames = clean[0].shape
    filters = [random_atf(substream(spec.seed, SCENE_STREAM, _ATF, k),
                          spec.n_channels, spec.n_taps, n_freqs)
               for k in range(spec.n_sources)]
    reverberant = sum(apply_atf(x, h).data for x, h in zip(clean, filters))

    shape = (spec.n_channels, n_freqs, n_frames)
    if spec.snr_db == np.inf:
        noise = np.zeros(shape, dtype=complex)
        noise_cov = np.zeros((n_freqs, spec.n_channels, spec.n_channels),
                             dtype=complex)
    else:
        noise, noise_cov = _noise(spec, substream(spec.seed, SCENE_STREAM,
                                                  _NOISE), shape)
        noise_power = np.sum(np.abs(noise) ** 2)
        if noise_power == 0:
            raise InvalidInput('noise_param gives zero noise power')
        gain = np.sqrt(np.sum(np.abs(reverberant) ** 2) / noise_power
                       * 10 ** (-spec.snr_db / 10.0))
        noise = gain * noise
        noise_cov = gain ** 2 * noise_cov

    mixture = MultiSpectrogram(reverberant + noise, spec.fft_size, spec.hop,
                               spec.sample_rate, length=n_samples)
    reference = mixture.channel(0)
    pseudo = []
    for k, x in enumerate(clean):
        leakage = reference.with_data(reference.data - x.data)
        pseudo.append(degrade(
            x, spec.pseudo_sisdr_db, leakage=leakage,
            rng=substream(spec.seed, SCENE_STREAM, _DEGRADE, k)))
    logger.debug('scene seed=%d C=%d K=%d snr=%s', spec.seed, spec.n_channels,
                 spec.n_sources, spec.snr_db)
    return Scene(spec, mixture, clean, filters,
                 mixture.with_data(noise), noise_cov, pseudo)


def degrade(clean, target_sisdr_db, seed=0, leakage=None, rng=None):
    """``clean`` plus a perturbation scaled to the target SI-SDR.

    The perturbation has the magnitude of ``leakage`` (or of ``clean``) with
    random phase; its projection on the clean waveform is removed first, so
    the SI-SDR of the result is exact up to rounding.
    """
    if target_sisdr_db == np.inf:
        return clean.with_data(clean.data.copy())
    if np.isnan(target_sisdr_db) or target_sisdr_db == -np.inf:
        raise InvalidInput('target SI-SDR must be finite or +inf')
    if rng is None:
        rng = substream(seed, SCENE_STREAM, _DEGRADE)
    reference = istft(clean)
    energy = np.dot(reference, reference)
    if energy == 0:
        raise InvalidInput('clean signal is silent')

    shape = clean.data if leakage is None else leakage.data
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi, clean.shape))
    error = istft(clean.with_data(np.abs(shape) * phase))
    error -= np.dot(error, reference) / energy * reference
    if not np.any(error):
        error = rng.standard_normal(reference.size)
        error -= np.dot(error, reference) / energy * reference
    gain = np.sqrt(energy / np.dot(error, error)
                   * 10 ** (-target_sisdr_db / 10.0))
    out = stft(reference + gain * error, clean.fft_size, clean.hop,
               clean.sample_rate, keep_dc=clean.keep_dc)
    return clean.with_data(out.data) if clean.keep_dc else out


def si_sdr(estimate, reference):
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if estimate.shape != reference.shape or estimate.ndim != 1 \
            or estimate.size < 1:
        raise InvalidInput('estimate and reference must be equal-length 1-D')
    energy = np.dot(reference, reference)
    if energy == 0:
        raise InvalidInput('reference is silent')
    target = np.dot(estimate, reference) / energy * reference
    error = estimate - target
    target_energy = np.dot(target, target)
    error_energy = np.dot(error, error)
    if target_energy == 0:
        return -SISDR_CAP
    if error_energy == 0:
        return SISDR_CAP
    return float(np.clip(10 * np.log10(target_energy / error_energy),
                         -SISDR_CAP, SISDR_CAP))


def si_sdr_matrix(estimates, references):
    """scores[i, j] = si_sdr(estimates[j], references[i])."""
    return np.array([[si_sdr(e, r) for e in estimates] for r in references])


def permute_match(estimates, references):
    """Permutation p maximising the mean SI-SDR of estimates[p[i]] against
    references[i]; exhaustive for K <= 4."""
    if len(estimates) != len(references) or not references:
        raise InvalidInput('need as many estimates as references, K >= 1')
    scores = si_sdr_matrix(estimates, references)
    n = len(references)
    if n > 4:
        _, cols = linear_sum_assignment(scores, maximize=True)
        return tuple(int(c) for c in cols)
    best, best_score = None, -np.inf
    for perm in itertools.permutations(range(n)):
        score = scores[np.arange(n), perm].mean()
        if score > best_score:
            best, best_score = perm, score
    return best


def matched_si_sdr(estimates, references, match=True):
    perm = permute_match(estimates, references) if match \
        else tuple(range(len(references)))
    return perm, [si_sdr(estimates[p], r) for p, r in zip(perm, references)]


SceneFiles = collections.namedtuple('SceneFiles',
                                    'spec mixture clean pseudo paths')


def dump_scene(scene, directory, subtype='FLOAT'):
    if not os.path.isdir(directory):
        os.makedirs(directory)
    spec = scene.spec
    paths = collections.OrderedDict(mixture='mixture.wav')
    audio.write_wav(os.path.join(directory, paths['mixture']),
                    scene.mixture_waveform(), spec.sample_rate, subtype)
    for role, waves in (('clean', scene.clean_waveforms()),
                        ('pseudo', scene.pseudo_waveforms())):
        for k, wave in enumerate(waves):
            name = '{}_{}'.format(role, k)
            paths[name] = name + '.wav'
            audio.write_wav(os.path.join(directory, paths[name]), wave,
                            spec.sample_rate, subtype)
    manifest = collections.OrderedDict(paths)
    manifest.update(spec.as_record())
    keyvalue.dump(manifest, os.path.join(directory, MANIFEST),
                  header='synthetic scene')
    return os.path.join(directory, MANIFEST)


def load_scene(directory):
    path = os.path.join(directory, MANIFEST)
    try:
        record = keyvalue.load(path)
    except (IOError, OSError) as exc:
        raise IOError('cannot read {}: {}'.format(path, exc))
    spec = SceneSpec.from_record(record)

    def read(name):
        data, _ = audio.read_wav(os.path.join(directory, record[name]))
        return data

    paths = collections.OrderedDict(
        (k, os.path.join(directory, v)) for k, v in record.items()
        if v.endswith('.wav'))
    return SceneFiles(
        spec=spec, mixture=read('mixture'),
        clean=[read('clean_{}'.format(k))[0] for k in range(spec.n_sources)],
        pseudo=[read('pseudo_{}'.format(k))[0]
                for k in range(spec.n_sources)],
        paths=paths)
