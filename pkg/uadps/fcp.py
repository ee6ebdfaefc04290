# coding=utf-8
"""Forward convolutive prediction.

Per frequency f and channel c, FCP fits a multi-frame filter h so that
sum_j h_j X(l - d_j, f) explains Y_c(l, f) in the weighted least-squares
sense, with weights 1 / lambda(l, f) computed from the regression target.
Lags are d_j = j - causal_offset; with the default offset 0 the filter is
causal. Frames outside [0, L) are zero.
"""
import dataclasses
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import DegenerateWeights, InvalidInput, SolveFailure
from .spectral import MultiSpectrogram, Spectrogram

logger = logging.getLogger(__name__)

# floor on lambda relative to its maximum; only reachable with gamma = 0
LAMBDA_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class FcpConfig(object):
    n_taps: int = 13
    gamma: float = 1e-3
    causal_offset: int = 0
    ridge: float = 1e-10

    def __post_init__(self):
        if self.n_taps < 1:
            raise InvalidInput('n_taps must be >= 1')
        if not self.gamma >= 0:
            raise InvalidInput('gamma must be >= 0')
        if not 0 <= self.causal_offset < self.n_taps:
            raise InvalidInput('causal_offset must be in [0, n_taps)')
        if not self.ridge >= 0:
            raise InvalidInput('ridge must be >= 0')


class AtfFilter(object):
    """Filter bank H[c, j, f]; ``failures`` lists (f, c) bins whose solve
    failed and were zeroed."""

    def __init__(self, taps, offset=0, failures=()):
        taps = np.asarray(taps, dtype=complex)
        if taps.ndim != 3 or taps.shape[1] < 1:
            raise InvalidInput('filter taps must be C x N_H x F')
        if not np.all(np.isfinite(taps)):
            raise InvalidInput('filter taps contain non-finite values')
        self.taps = taps
        self.offset = offset
        self.failures = list(failures)

    @property
    def n_channels(self):
        return self.taps.shape[0]

    @property
    def n_taps(self):
        return self.taps.shape[1]

    @property
    def n_freqs(self):
        return self.taps.shape[2]

    @property
    def lags(self):
        return np.arange(self.n_taps) - self.offset

    @classmethod
    def delta(cls, n_channels, n_freqs, n_taps=1):
        taps = np.zeros((n_channels, n_taps, n_freqs), dtype=complex)
        taps[:, 0, :] = 1.0
        return cls(taps)


def delay(x, d):
    """x(l - d) along the last axis, zero filled; negative d advances."""
    if d == 0:
        return x
    out = np.zeros_like(x)
    n = x.shape[-1]
    if abs(d) >= n:
        return out
    if d > 0:
        out[..., d:] = x[..., :n - d]
    else:
        out[..., :n + d] = x[..., -d:]
    return out


def _regressors(x, lags):
    return np.stack([delay(x, d) for d in lags])


def fcp_weights(mixture, gamma):
    if not gamma >= 0:
        raise InvalidInput('gamma must be >= 0')
    power = np.mean(np.abs(mixture.data) ** 2, axis=0)
    peak = power.max()
    if peak == 0:
        raise DegenerateWeights('target is identically zero')
    return power + gamma * peak


def _normal_equations(source, target, cfg):
    lags = np.arange(cfg.n_taps) - cfg.causal_offset
    lam = fcp_weights(target, cfg.gamma)
    weights = 1.0 / np.maximum(lam, LAMBDA_FLOOR * lam.max())
    regressors = _regressors(source.data, lags)
    weighted = (np.conj(regressors) * weights).transpose(1, 0, 2)
    gram = weighted @ regressors.transpose(1, 2, 0)
    rhs = weighted @ target.data.transpose(1, 2, 0)
    load = cfg.ridge * np.trace(gram, axis1=1, axis2=2).real / cfg.n_taps
    gram = gram + load[:, None, None] * np.eye(cfg.n_taps)
    return lags, weights, regressors, gram, rhs


def _solve_bins(gram, rhs):
    """Solve gram[f] x = rhs[f] for every bin by Cholesky.

    Returns the solutions and the bins whose factorisation failed; those
    rows are left at zero.
    """
    if np.all(np.isfinite(gram)):
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            pass
        else:
            half = np.linalg.solve(chol, rhs)
            upper = np.conj(np.swapaxes(chol, -1, -2))
            return np.linalg.solve(upper, half), []
    out = np.zeros(rhs.shape, dtype=complex)
    failed = []
    for f in range(gram.shape[0]):
        try:
            out[f] = cho_solve(cho_factor(gram[f], lower=True), rhs[f])
        except (LinAlgError, ValueError):
            failed.append(f)
    return out, failed


def fcp_estimate(source, target, cfg, strict=False):
    source.check_compatible(target)
    n_channels = target.n_channels
    if not np.any(target.data):
        return AtfFilter(np.zeros((n_channels, cfg.n_taps, source.n_freqs),
                                  dtype=complex), cfg.causal_offset)

    _, _, _, gram, rhs = _normal_equations(source, target, cfg)
    taps, failed = _solve_bins(gram, rhs)
    if failed and strict:
        # one factorisation serves every channel of the bin
        raise SolveFailure(failed[0], None,
                           'normal equations singular at bin {} (all '
                           'channels)'.format(failed[0]))
    failures = [(f, c) for f in failed for c in range(n_channels)]
    if failures:
        logger.warning('FCP solve failed on %d of %d bins; taps zeroed',
                       len(failures) // n_channels, source.n_freqs)
    return AtfFilter(taps.transpose(2, 1, 0), cfg.causal_offset, failures)


def fcp_objective(source, target, filt, gamma):
    """Weighted residual energy per (channel, frequency)."""
    lam = fcp_weights(target, gamma)
    residual = target.data - apply_atf(source, filt).data
    return np.sum(np.abs(residual) ** 2 / lam, axis=-1)


def _check_filter(n_freqs, filt):
    if filt.n_freqs != n_freqs:
        raise InvalidInput('filter has {} bins, signal has {}'.format(
            filt.n_freqs, n_freqs))


def apply_atf(source, filt):
    _check_filter(source.n_freqs, filt)
    out = np.zeros((filt.n_channels,) + source.shape, dtype=complex)
    for j, d in enumerate(filt.lags):
        out += filt.taps[:, j, :, None] * delay(source.data, d)
    return MultiSpectrogram(out, source.fft_size, source.hop,
                            source.sample_rate, length=source.length)


def apply_atf_adjoint(residual, filt):
    _check_filter(residual.shape[1], filt)
    if filt.n_channels != residual.n_channels:
        raise InvalidInput('filter has {} channels, residual has {}'.format(
            filt.n_channels, residual.n_channels))
    out = np.zeros(residual.shape[1:], dtype=complex)
    for j, d in enumerate(filt.lags):
        collapsed = np.sum(np.conj(filt.taps[:, j, :, None]) * residual.data,
                           axis=0)
        out += delay(collapsed, -d)
    return Spectrogram(out, residual.fft_size, residual.hop,
                       residual.sample_rate, length=residual.length)


def apply_atf_filter_adjoint(source, residual, filt):
    """Adjoint of apply_atf with respect to the taps: returns C x N_H x F."""
    out = np.zeros_like(filt.taps)
    for j, d in enumerate(filt.lags):
        out[:, j, :] = np.sum(
            residual.data * np.conj(delay(source.data, d)), axis=-1)
    return out


def fcp_estimate_vjp(source, target, filt, taps_grad, cfg):
    """Gradient with respect to ``source`` of a loss whose gradient with
    respect to the FCP taps is ``taps_grad`` (C x N_H x F).

    Uses the implicit-function rule on the normal equations; the ridge
    load is treated as a constant.
    """
    if not np.any(target.data):
        return source.with_data(np.zeros(source.shape, dtype=complex))
    lags, weights, regressors, gram, _ = _normal_equations(source, target,
                                                            cfg)
    # v = M^-1 g per frequency, F x N_H x C; failed bins stay zero
    v, _ = _solve_bins(gram, taps_grad.transpose(2, 1, 0))

    h = filt.taps.transpose(0, 2, 1)
    v = v.transpose(2, 0, 1)
    residual = target.data - apply_atf(source, filt).data
    fitted_v = (v.transpose(1, 0, 2)
                @ regressors.transpose(1, 0, 2)).transpose(1, 0, 2)

    out = np.zeros(source.shape, dtype=complex)
    for j, d in enumerate(lags):
        a_bar = weights * np.sum(
            residual * np.conj(v[:, :, j, None])
            - fitted_v * np.conj(h[:, :, j, None]), axis=0)
        out += delay(a_bar, -d)
    return source.with_data(out)
