# coding=utf-8
import numpy as np
from scipy.signal import lfilter

from .exceptions import InvalidInput, NumericalError
from .fcp import apply_atf

LOAD_DELTA = 1e-4
EPS_ABS = 1e-10


def hermitian_part(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


class ScmField(object):
    """Per-(frame, frequency) C x C covariances, stored L x F x C x C.

    An inverted field keeps the estimate it was computed from in ``origin``.
    """

    def __init__(self, cov, eta=None, load_delta=LOAD_DELTA, inverted=False,
                 origin=None):
        cov = np.asarray(cov, dtype=complex)
        if cov.ndim != 4 or cov.shape[-1] != cov.shape[-2]:
            raise InvalidInput('covariance field must be L x F x C x C')
        self.cov = cov
        self.eta = eta
        self.load_delta = load_delta
        self.inverted = inverted
        self.origin = origin

    @property
    def n_channels(self):
        return self.cov.shape[-1]

    @classmethod
    def identity(cls, n_frames, n_freqs, n_channels, scale=1.0,
                 inverted=True):
        eye = scale * np.eye(n_channels, dtype=complex)
        cov = np.broadcast_to(eye, (n_frames, n_freqs, n_channels,
                                    n_channels)).copy()
        return cls(cov, inverted=inverted)

    def apply(self, noise):
        """Phi(l, f) n(l, f) for every bin; noise is C x F x L."""
        self._check_noise(noise)
        n = noise.data.transpose(2, 1, 0)[..., None]
        return noise.with_data((self.cov @ n)[..., 0].transpose(2, 1, 0))

    def _check_noise(self, noise):
        c, f, l = noise.shape
        if self.cov.shape[:3] != (l, f, c):
            raise InvalidInput('field {} does not match noise {}'.format(
                self.cov.shape, noise.shape))


def estimate_noise(mixture, sources, filters):
    if not sources or len(sources) != len(filters):
        raise InvalidInput('need one filter per source, K >= 1')
    residual = mixture.data.copy()
    for source, filt in zip(sources, filters):
        mixture.check_compatible(source)
        if filt.n_channels != mixture.n_channels:
            raise InvalidInput('filter channels do not match the mixture')
        residual -= apply_atf(source, filt).data
    return mixture.with_data(residual)


def scm_ema(noise, eta, load_delta=LOAD_DELTA):
    if not 0 <= eta < 1:
        raise InvalidInput('eta must be in [0, 1)')
    n = noise.data.transpose(2, 1, 0)
    outer = n[..., :, None] * np.conj(n[..., None, :])
    # phi(-1) = outer(0), so the first output is outer(0) itself
    initial = eta * outer[:1]
    cov, _ = lfilter([1.0 - eta], [1.0, -eta], outer, axis=0, zi=initial)
    return ScmField(hermitian_part(cov), eta=eta, load_delta=load_delta)


def scm_inverse(field, eps_abs=EPS_ABS):
    cov = field.cov
    if not np.all(np.isfinite(cov)):
        raise InvalidInput('covariance field contains non-finite slices')
    c = field.n_channels
    trace = np.trace(cov, axis1=-2, axis2=-1).real
    load = field.load_delta * trace / c + eps_abs
    loaded = hermitian_part(cov) + load[..., None, None] * np.eye(c)
    try:
        chol = np.linalg.cholesky(loaded)
    except np.linalg.LinAlgError:
        raise NumericalError('loaded covariance is not positive definite')
    chol_inv = np.linalg.inv(chol)
    inverse = np.conj(np.swapaxes(chol_inv, -1, -2)) @ chol_inv
    return ScmField(hermitian_part(inverse), eta=field.eta,
                    load_delta=field.load_delta, inverted=True, origin=field)


def quadratic_form(noise, inv_field, applied=None):
    """N^H Phi^-1 N summed over bins; ``applied`` may carry Phi^-1 N."""
    inv_field._check_noise(noise)
    if not np.all(np.isfinite(inv_field.cov)):
        raise InvalidInput('inverse field contains non-finite values')
    if applied is None:
        applied = inv_field.apply(noise)
    value = np.vdot(noise.data, applied.data)
    if abs(value.imag) >= 1e-8 * abs(value.real) + 1e-12:
        raise NumericalError(
            'quadratic form has imaginary residue {:.3e} for real part '
            '{:.3e}'.format(value.imag, value.real))
    return float(value.real)
