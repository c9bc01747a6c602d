import json
import logging
import math

import numpy as np

from mgcal.sde.continuum import PricePath, time_grid, price_vectors

logger = logging.getLogger(__name__)


def risk_neutral_terminal(p_t, r, theta, nu, n_samples, rng=None):
    '''
    Samples of p(T) = p_t exp{(r - nu/2) theta + sqrt(nu theta) Z}, with nu the
    variance per unit time and Z standard normal.
    '''
    if nu < 0:
        raise ValueError(f'Variance nu should be >= 0, got {nu}')
    if not theta > 0:
        raise ValueError(f'Maturity theta should be > 0, got {theta}')
    if not p_t > 0:
        raise ValueError(f'Spot should be > 0, got {p_t}')
    if n_samples < 1:
        raise ValueError('Please provide at least one sample')
    if nu == 0:
        return np.full(n_samples, p_t*math.exp(r*theta))
    rng = np.random.default_rng() if rng is None else rng
    Z = rng.standard_normal(n_samples)
    return p_t*np.exp((r - nu/2)*theta + np.sqrt(nu*theta)*Z)


def terminal_summary(samples, seed=None):
    samples = np.asarray(samples, dtype=float)
    return {'mean': float(samples.mean()),
            'variance': float(samples.var(ddof=1)) if len(samples) > 1 else 0.0,
            'count': int(len(samples)),
            'seed': seed}


def write_summary(summary, path):
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return path


def risk_neutral_path(spec, table, mu, p0, r, horizon, dt=None, rng=None, n_paths=1):
    '''
    Risk-neutral log price driven by the continuum score noise:
        d log p = (r - v_t/2) dt + c v^{mu_t}' A dW,
    with v_t = c^2 |A' v^{mu_t}|^2. The discounted price is a martingale.
    '''
    if not p0 > 0:
        raise ValueError(f'Initial price should be > 0, got {p0}')
    dt = 0.01/spec.gamma if dt is None else dt
    n_steps, dt = time_grid(horizon, dt)
    mu = np.asarray(mu, dtype=np.int64)
    if len(mu) != n_steps:
        raise ValueError(f'Information sequence has {len(mu)} entries for {n_steps} steps')

    loadings = spec.price_coefficient*(price_vectors(spec, table, mu) @ spec.factor)
    inst_var = (loadings**2).sum(axis=1)
    rng = np.random.default_rng() if rng is None else rng
    dW = rng.standard_normal((n_paths, n_steps, spec.N))*np.sqrt(dt)
    shocks = np.einsum('pti,ti->pt', dW, loadings)
    increments = (r - inst_var/2)*dt + shocks
    log_price = np.log(p0) + np.concatenate([np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)
    if n_paths == 1:
        log_price = log_price[0]
    return PricePath(times=np.arange(n_steps + 1)*dt, log_price=log_price, mode='risk-neutral-path')
