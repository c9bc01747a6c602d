"""
European calls under a lognormal risk-neutral price whose variance per unit
time, nu, comes from the game: nu = control * sigma^2_N / (w^2 N^2).
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from mgcal.utilities import MgcalError, NoArbitrageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PricingInput:
    spot: float
    strike: float
    rate: float
    theta: float
    nu: float = 0.0

    def __post_init__(self):
        if not self.spot > 0:
            raise ValueError(f'Spot should be > 0, got {self.spot}')
        if not self.strike > 0:
            raise ValueError(f'Strike should be > 0, got {self.strike}')
        if not self.theta > 0:
            raise ValueError(f'Maturity theta should be > 0 years, got {self.theta}')
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ValueError(f'Variance nu should be finite and >= 0, got {self.nu}')
        if not math.isfinite(self.rate):
            raise ValueError('Rate should be finite')

    @property
    def discounted_strike(self):
        return self.strike*math.exp(-self.rate*self.theta)

    @property
    def moneyness(self):
        return self.spot/self.strike

    def with_nu(self, nu):
        return replace(self, nu=nu)


@dataclass(frozen=True)
class GameVarianceParams:
    kind: str
    control: float
    sigma2_N: float
    w: float
    N: int

    @property
    def nu(self):
        return game_nu(self)


def game_nu(params):
    '''
    nu_MG = alpha sigma^2_N/(w^2 N^2); nu_GCMG has alpha_ns in place of alpha.
    '''
    if params.kind not in ('MG', 'GCMG'):
        raise ValueError(f'Please provide a valid game kind, got {params.kind!r}')
    if not params.w > 0:
        raise ValueError(f'Strategy weight w should be > 0, got {params.w}')
    if not params.N > 0:
        raise ValueError(f'Number of agents N should be > 0, got {params.N}')
    return params.control*params.sigma2_N/(params.w**2*params.N**2)


def _d(inp):
    s = math.sqrt(inp.nu*inp.theta)
    d = (math.log(inp.spot/inp.strike) + (inp.rate + inp.nu/2)*inp.theta)/s
    return d, d - s


def call_price(inp):
    if inp.nu*inp.theta == 0.0:
        return max(inp.spot - inp.discounted_strike, 0.0)
    d1, d2 = _d(inp)
    return inp.spot*norm.cdf(d1) - inp.discounted_strike*norm.cdf(d2)


def complementary_price(inp):
    '''
    The call formula with the normal-CDF arguments negated and the two legs
    swapped: K e^{-r theta} Phi(-d2) - p Phi(-d1).
    '''
    if inp.nu*inp.theta == 0.0:
        return max(inp.discounted_strike - inp.spot, 0.0)
    d1, d2 = _d(inp)
    return inp.discounted_strike*norm.cdf(-d2) - inp.spot*norm.cdf(-d1)


def parity_gap(inp):
    return call_price(inp) - complementary_price(inp) - (inp.spot - inp.discounted_strike)


def no_arbitrage_bounds(inp):
    return max(inp.spot - inp.discounted_strike, 0.0), inp.spot


def implied_nu(target_price, inp, tolerance=1e-10):
    '''
    Variance nu at which call_price matches target_price, found by bracketed
    root search on sqrt(nu). `inp.nu` is ignored.
    '''
    lower, upper = no_arbitrage_bounds(inp)
    if not lower < target_price < upper:
        raise NoArbitrageError(f'Call price {target_price} is outside the no-arbitrage bounds '
                               f'({lower}, {upper}) for spot {inp.spot}, strike {inp.strike}, '
                               f'rate {inp.rate}, maturity {inp.theta}')

    def gap(vol):
        return call_price(inp.with_nu(vol**2)) - target_price

    vol_hi = 1.0
    for _ in range(64):
        if gap(vol_hi) > 0:
            break
        vol_hi *= 2
    else:
        raise MgcalError(f'Could not bracket the implied variance for price {target_price}')

    vol = brentq(gap, 0.0, vol_hi, xtol=1e-300, rtol=4*np.finfo(float).eps, maxiter=500)
    nu = vol**2
    miss = abs(gap(vol))
    if miss > tolerance*inp.spot:
        logger.warning(f'Implied variance {nu:.6g} reprices with error {miss:.3e}')
    return nu
