"""
Volatility order parameter sigma^2_N = <B^2>/w^2 and the log-return variance
of the attendance-driven price.
"""

import logging
from dataclasses import dataclass

import numpy as np

from mgcal.simulator.game_simulator import simulate
from mgcal.utilities import batch_means

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SigmaEstimate:
    sigma2_N: float
    per_N: float
    stderr: float
    burn_in: int
    measured: int

    @property
    def per_N_stderr(self):
        return self.stderr*self.per_N/self.sigma2_N if self.sigma2_N > 0 else 0.0


def default_windows(config, burn_in=None, measure=None):
    burn_in = 200*config.P if burn_in is None else int(burn_in)
    measure = 1000*config.P if measure is None else int(measure)
    return burn_in, measure


def sigma_from_attendance(attendance, config, n_batches=10):
    b2 = np.asarray(attendance, dtype=float)**2/config.w**2
    mean, stderr = batch_means(b2, n_batches)
    return mean, stderr


def estimate_sigma(config, table=None, burn_in=None, measure=None, n_batches=10,
                   activation='prose', init_scores=0.0):
    burn_in, measure = default_windows(config, burn_in, measure)
    if measure < 1:
        raise ValueError(f'Measurement window should be >= 1 step, got {measure}')
    if measure < 10*n_batches:
        raise ValueError(f'Measurement window of {measure} steps is shorter than '
                         f'10 steps per batch for {n_batches} batches')

    output = simulate(config, burn_in + measure, table=table, init_scores=init_scores,
                      activation=activation)
    sigma2, stderr = sigma_from_attendance(output['attendance'][burn_in:], config, n_batches)
    logger.debug(f'{config.kind} N={config.N} P={config.P} seed={config.seed}: '
                 f'sigma2_N = {sigma2:.4f} +/- {stderr:.4f}')
    return SigmaEstimate(sigma2_N=sigma2, per_N=sigma2/config.N, stderr=stderr,
                         burn_in=burn_in, measured=measure)


def return_variance(sigma2_N, N, w):
    '''
    Per-step variance of log returns implied by sigma^2_N: sigma^2_N/(w^2 N^2).
    The discrete price map gives sigma^2_N/N^2, which agrees at w = 1.
    '''
    return sigma2_N/(w**2*N**2)


def log_return_variance(attendance, config, n_batches=10):
    '''
    Sample variance of per-step log returns B/(N w), with a batch-means
    standard error computed on the squared centred returns.
    '''
    returns = np.asarray(attendance, dtype=float)/(config.N*config.w)
    centred = (returns - returns.mean())**2
    _, stderr = batch_means(centred, n_batches)
    return float(returns.var(ddof=1)), stderr
