# coding=utf-8
"""DDPM schedule and sampling steps in the compressive STFT domain.

Steps are 1-based as in the usual DDPM notation, with the boundary
convention alpha_bar(0) = 1. Complex noise CN(0, 2I) is drawn as independent
standard normals on the real and imaginary parts.
"""
import numpy as np

from .exceptions import InvalidInput

# substream purposes
INIT_STREAM = 0
PRIOR_STREAM = 1
PROBE_STREAM = 2
SCENE_STREAM = 3


def substream(seed, *key):
    """Counter-based generator for (seed, key); independent of call order."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(
        int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class Schedule(object):
    def __init__(self, beta):
        beta = np.asarray(beta, dtype=float)
        self.beta = beta
        self.alpha = 1.0 - beta
        self.alpha_bar = np.cumprod(self.alpha)
        alpha_bar_prev = np.concatenate([[1.0], self.alpha_bar[:-1]])
        self.sigma = np.sqrt((1.0 - alpha_bar_prev) / (1.0 - self.alpha_bar)
                             * beta)

    @property
    def T(self):
        return self.beta.size

    def check_step(self, t, lowest=1):
        if not lowest <= t <= self.T:
            raise InvalidInput('step {} outside [{}, {}]'.format(
                t, lowest, self.T))

    def alpha_bar_at(self, t):
        self.check_step(t, lowest=0)
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def transition(self, t, t_prev=None):
        """(alpha, beta, sigma) of the reverse step t -> t_prev.

        For t_prev = t - 1 these are the tabulated coefficients; larger gaps
        use the equivalent single step between the two alpha_bar values.
        """
        self.check_step(t)
        if t_prev is None or t_prev == t - 1:
            i = t - 1
            return (float(self.alpha[i]), float(self.beta[i]),
                    float(self.sigma[i]))
        if not 0 <= t_prev < t:
            raise InvalidInput('t_prev must be in [0, t)')
        alpha_bar_t = self.alpha_bar_at(t)
        alpha_bar_prev = self.alpha_bar_at(t_prev)
        alpha = alpha_bar_t / alpha_bar_prev
        beta = 1.0 - alpha
        sigma = np.sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t) * beta)
        return alpha, beta, float(sigma)


def make_schedule(T=1000, beta_start=1e-4, beta_end=0.02):
    if T < 2:
        raise InvalidInput('T must be >= 2')
    if not 0 < beta_start < beta_end < 1:
        raise InvalidInput('need 0 < beta_start < beta_end < 1')
    return Schedule(np.linspace(beta_start, beta_end, T))


def forward_to_step(x0, t, sched, rng=None, noise=None):
    sched.check_step(t)
    if noise is None:
        if rng is None:
            raise InvalidInput('a generator or injected noise is required')
        noise = complex_normal(rng, x0.shape)
    alpha_bar = sched.alpha_bar_at(t)
    return x0.with_data(np.sqrt(alpha_bar) * x0.data
                        + np.sqrt(1.0 - alpha_bar) * noise)


def prior_step(x_t, eps_hat, t, sched, rng=None, noise=None, t_prev=None):
    x_t.check_compatible(eps_hat)
    alpha, beta, sigma = sched.transition(t, t_prev)
    alpha_bar = sched.alpha_bar_at(t)
    mean = (x_t.data - beta / np.sqrt(1.0 - alpha_bar) * eps_hat.data) \
        / np.sqrt(alpha)
    if sigma > 0:
        if noise is None:
            if rng is None:
                raise InvalidInput(
                    'a generator or injected noise is required')
            noise = complex_normal(rng, x_t.shape)
        mean = mean + sigma * noise
    return x_t.with_data(mean)


def one_step_denoise(x_t, eps_hat, t, sched):
    x_t.check_compatible(eps_hat)
    alpha_bar = sched.alpha_bar_at(t)
    return x_t.with_data((x_t.data - np.sqrt(1.0 - alpha_bar) * eps_hat.data)
                         / np.sqrt(alpha_bar))


def noise_to_score(eps_hat, t, sched):
    sched.check_step(t)
    return eps_hat.with_data(-eps_hat.data
                             / np.sqrt(1.0 - sched.alpha_bar_at(t)))
