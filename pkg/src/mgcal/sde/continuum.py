"""
Continuum-limit score dynamics and the log-price paths built on them.

The score variables y_i follow
    MG:    dy_i = [-xiTheta_i - sum_j xiXi_ij tanh(y_j)] dt + (A dW)_i
    GCMG:  dy_i = [-sum_j aA_ij H(y_j) - eps_i] dt + (A dW)_i
with A A' = scale * covariance table, and scale = Gamma sigma^2_N w^2 / (alpha N)
for the MG or Gamma sigma^2_N w^2 (n_s + n_p) / N for the GCMG. sigma^2_N is a
constant taken from the matched discrete game at stationarity.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd

from mgcal.game.streams import substream
from mgcal.game.strategies import reduced_stats
from mgcal.simulator.implementations.GCMG_engine import heaviside, ACTIVATIONS
from mgcal.simulator.implementations.MG_engine import draw_mu
from mgcal.utilities import psd_factor

logger = logging.getLogger(__name__)

MODES = ('discrete-attendance', 'continuum', 'risk-neutral-terminal', 'risk-neutral-path')


@dataclass(frozen=True)
class SdeSpec:
    kind: str
    stats: object
    sigma2_N: float
    gamma: float
    control: float
    N: int
    w: float
    epsilon: float = 0.0
    N_s: int = 0
    activation: str = 'prose'

    def __post_init__(self):
        if self.kind not in ('MG', 'GCMG'):
            raise ValueError(f'Please provide a valid game kind, got {self.kind!r}')
        if not self.sigma2_N > 0:
            raise ValueError(f'sigma2_N should be > 0, got {self.sigma2_N}')
        if self.control <= 0 or self.N < 1 or self.w <= 0 or self.gamma <= 0:
            raise ValueError('Control, N, w and gamma should all be positive')
        if self.activation not in ACTIVATIONS:
            raise ValueError(f'Please provide a valid activation convention {ACTIVATIONS}')
        if self.kind == 'MG' and (self.stats.xiXi is None or self.stats.xiTheta is None):
            raise ValueError('MG dynamics need xiTheta and xiXi')
        if self.kind == 'GCMG' and self.stats.aA is None:
            raise ValueError('GCMG dynamics need aA')

    @property
    def diffusion_scale(self):
        # alpha_ns = 1/(n_s + n_p), so both kinds share the same expression
        return self.gamma*self.sigma2_N*self.w**2/(self.control*self.N)

    @property
    def covariance(self):
        return self.diffusion_scale*np.asarray(self.stats.covariance_table)

    @cached_property
    def factor(self):
        return psd_factor(self.covariance)

    @property
    def price_coefficient(self):
        '''
        c in d log p = -c sum_i v_i^mu dy_i, with v = xi (MG) or a (GCMG).
        '''
        if self.kind == 'MG':
            return 2*self.control/(self.w**3*self.gamma*self.N)
        return self.control/(self.w**3*self.gamma*self.N)

    def drift(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == 'MG':
            return -self.stats.xiTheta - np.tanh(y) @ self.stats.xiXi
        h = np.ones_like(y)
        h[..., :self.N_s] = heaviside(y[..., :self.N_s], self.activation)
        out = -(h @ self.stats.aA)
        out[..., :self.N_s] -= self.epsilon
        return out


def build_spec(config, table, sigma2_N, activation='prose'):
    stats = reduced_stats(table, config)
    return SdeSpec(kind=config.kind, stats=stats, sigma2_N=float(sigma2_N), gamma=config.gamma,
                   control=config.control, N=config.N, w=config.w, epsilon=config.epsilon,
                   N_s=config.N_s, activation=activation)


@dataclass(frozen=True)
class YPath:
    '''
    times: (n_steps + 1,) game-time grid
    y:     (n_paths, n_steps + 1, N) score variables
    '''
    times: np.ndarray
    y: np.ndarray
    dt: float

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def terminal(self):
        return self.y[:, -1, :]


def time_grid(horizon, dt):
    if not dt > 0:
        raise ValueError(f'Step dt should be > 0, got {dt}')
    if horizon < dt:
        raise ValueError(f'Horizon {horizon} is shorter than one step {dt}')
    n_steps = max(1, int(round(horizon/dt)))
    if not np.isclose(n_steps*dt, horizon, rtol=1e-12, atol=0.0):
        logger.debug(f'Step adjusted from {dt} to {horizon/n_steps} to land on horizon {horizon}')
    return n_steps, horizon/n_steps


def integrate_y(spec, y0, horizon, dt=None, rng=None, n_paths=1, dW=None,
                with_drift=True, with_diffusion=True):
    '''
    Euler-Maruyama integration, y <- y + drift(y) dt + A dW.

    dW, when given, holds the Brownian increments with shape
    (n_paths, n_steps, N); otherwise they are drawn from `rng`.
    '''
    dt = 0.01/spec.gamma if dt is None else dt
    n_steps, dt = time_grid(horizon, dt)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape[-1] != spec.N:
        raise ValueError(f'Initial state has {y0.shape[-1]} components, expected {spec.N}')
    if not np.isfinite(y0).all():
        raise ValueError('Initial state should be finite')

    A = spec.factor if with_diffusion else None
    if with_diffusion and dW is None:
        rng = np.random.default_rng() if rng is None else rng
        dW = rng.standard_normal((n_paths, n_steps, spec.N))*np.sqrt(dt)
    if dW is not None:
        dW = np.asarray(dW, dtype=float)
        if dW.shape[1:] != (n_steps, spec.N):
            raise ValueError(f'Brownian increments have shape {dW.shape}, expected (n_paths, {n_steps}, {spec.N})')
        n_paths = dW.shape[0]

    y = np.empty((n_paths, n_steps + 1, spec.N))
    y[:, 0, :] = y0
    current = y[:, 0, :].copy()
    for k in range(n_steps):
        if with_drift:
            current = current + spec.drift(current)*dt
        if with_diffusion:
            current = current + dW[:, k, :] @ A.T
        y[:, k + 1, :] = current
    if not np.isfinite(current).all():
        logger.warning('Score path left the finite range; consider a smaller dt')
    return YPath(times=np.arange(n_steps + 1)*dt, y=y, dt=dt)


def step_halving_check(spec, y0, horizon, dt=None, seed=0, n_paths=1000, tolerance=0.01,
                       moment=None):
    '''
    Integrate with dt and dt/2 on a shared Brownian path and compare a terminal
    moment (default: mean of |y|^2). Returns a dictionary with both values,
    the relative change and whether it is within `tolerance`.
    '''
    dt = 0.01/spec.gamma if dt is None else dt
    n_steps, dt = time_grid(horizon, dt)
    if moment is None:
        moment = lambda terminal: float((terminal**2).sum(axis=1).mean())

    rng = substream(seed, 'wiener')
    fine = rng.standard_normal((n_paths, 2*n_steps, spec.N))*np.sqrt(dt/2)
    coarse = fine[:, 0::2, :] + fine[:, 1::2, :]
    m_coarse = moment(integrate_y(spec, y0, horizon, dt, dW=coarse).terminal)
    m_fine = moment(integrate_y(spec, y0, horizon, dt/2, dW=fine).terminal)
    rel = abs(m_fine - m_coarse)/max(abs(m_fine), 1e-300)
    converged = rel <= tolerance
    if not converged:
        logger.warning(f'Step halving changed the terminal moment by {rel:.2%} (dt = {dt})')
    return {'dt': dt, 'coarse': m_coarse, 'fine': m_fine, 'relative_change': rel,
            'converged': converged}


def information_sequence(seed, P, n_steps):
    rng = substream(seed, 'mu')
    return np.array([draw_mu(u, P) for u in rng.random(n_steps)], dtype=np.int64)


@dataclass(frozen=True)
class PricePath:
    times: np.ndarray
    log_price: np.ndarray
    mode: str
    y_snapshot: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f'Unknown price path mode {self.mode!r}')
        if not np.isfinite(self.log_price).all():
            raise ValueError('Log-price path has non-finite entries')

    @property
    def price(self):
        return np.exp(self.log_price)

    @property
    def terminal_log_return(self):
        return self.log_price[..., -1] - self.log_price[..., 0]

    def to_frame(self):
        if self.log_price.ndim == 1:
            return pd.DataFrame({'time': self.times, 'log_price': self.log_price})
        n_paths, n_times = self.log_price.shape
        return pd.DataFrame({'path': np.repeat(np.arange(n_paths), n_times),
                             'time': np.tile(self.times, n_paths),
                             'log_price': self.log_price.ravel()})

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path


def price_path_discrete(attendance, config, p0=1.0):
    '''
    log p(t+1) = log p(t) + B(t)/(N w)
    '''
    if not p0 > 0:
        raise ValueError(f'Initial price should be > 0, got {p0}')
    B = np.asarray(attendance, dtype=float)
    log_price = np.log(p0) + np.concatenate(([0.0], np.cumsum(B)))/(config.N*config.w)
    return PricePath(times=np.arange(len(B) + 1, dtype=float), log_price=log_price,
                     mode='discrete-attendance')


def price_vectors(spec, table, mu):
    if spec.kind == 'MG':
        return table.xi[:, mu].T
    return table.entries[:, 0, mu].T


def price_path_continuum(spec, path, mu, table, p0=1.0):
    '''
    d log p = -c sum_i v_i^{mu(t)} dy_i, with c = 2 alpha/(w^3 Gamma N) and
    v = xi for the MG, c = alpha_ns/(w^3 Gamma N) and v = a for the GCMG.
    '''
    if not p0 > 0:
        raise ValueError(f'Initial price should be > 0, got {p0}')
    mu = np.asarray(mu, dtype=np.int64)
    if len(mu) != path.n_steps:
        raise ValueError(f'Information sequence has {len(mu)} entries for {path.n_steps} steps')
    if table.N != spec.N:
        raise ValueError(f'Strategy table has {table.N} agents, dynamics have {spec.N}')
    v = price_vectors(spec, table, mu)
    dy = np.diff(path.y, axis=1)
    increments = -spec.price_coefficient*np.einsum('pti,ti->pt', dy, v)
    log_price = np.log(p0) + np.concatenate([np.zeros((len(dy), 1)), np.cumsum(increments, axis=1)], axis=1)
    if log_price.shape[0] == 1:
        log_price = log_price[0]
    return PricePath(times=path.times, log_price=log_price, mode='continuum',
                     y_snapshot=path.terminal.copy())


def conditional_log_price_variance(spec, mu, table, dt):
    '''
    Exact variance of the drift-free continuum log price over a fixed
    information sequence: c^2 dt sum_t |A' v^{mu_t}|^2.
    '''
    v = price_vectors(spec, table, np.asarray(mu, dtype=np.int64))
    return float(spec.price_coefficient**2*dt*((v @ spec.factor)**2).sum())
