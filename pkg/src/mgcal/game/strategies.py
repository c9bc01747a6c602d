"""
Quenched strategy tables and their reduced statistics.

Entries are stored as an (N, S, P) float array with values in {-w, +w}.
For the MG, strategy index 0 is the '+' strategy and index 1 the '-' one.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mgcal.game.streams import substream


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class StrategyTable:
    entries: np.ndarray
    xi: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None

    @property
    def N(self):
        return self.entries.shape[0]

    @property
    def S(self):
        return self.entries.shape[1]

    @property
    def P(self):
        return self.entries.shape[2]

    @classmethod
    def from_entries(cls, entries):
        '''
        Build a table from an explicit (N, S, P) array, computing xi and Theta
        when S = 2.
        '''
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 3 or entries.shape[1] not in (1, 2):
            raise ValueError(f'Strategy entries should have shape (N, S, P) with S in (1, 2), got {entries.shape}')
        if entries.shape[1] == 2:
            xi = (entries[:, 0, :] - entries[:, 1, :])/2
            theta = ((entries[:, 0, :] + entries[:, 1, :])/2).sum(axis=0)
            return cls(_frozen(entries), _frozen(xi), _frozen(theta))
        return cls(_frozen(entries))


@dataclass(frozen=True)
class ReducedStats:
    '''
    xiTheta: (1/P) sum_mu xi_i^mu Theta^mu            (MG)
    xiXi:    (1/P) sum_mu xi_i^mu xi_j^mu             (MG)
    aA:      (1/P) sum_mu a_i^mu a_j^mu               (GCMG)
    '''
    xiTheta: Optional[np.ndarray] = None
    xiXi: Optional[np.ndarray] = None
    aA: Optional[np.ndarray] = None

    @property
    def covariance_table(self):
        return self.xiXi if self.xiXi is not None else self.aA


def generate_strategies(config):
    if config.N < 1 or config.P < 1:
        raise ValueError(f'Cannot draw strategies for N = {config.N}, P = {config.P}')
    rng = substream(config.seed, 'strategies')
    signs = rng.integers(0, 2, size=(config.N, config.S, config.P))
    return StrategyTable.from_entries(config.w*(2*signs - 1))


def reduced_stats(table, config):
    if (table.N, table.S, table.P) != (config.N, config.S, config.P):
        raise ValueError(f'Strategy table shape {table.entries.shape} does not match '
                         f'config (N={config.N}, S={config.S}, P={config.P})')
    P = config.P
    if config.kind == 'MG':
        xi = table.xi
        return ReducedStats(xiTheta=_frozen(xi @ table.theta/P),
                            xiXi=_frozen(xi @ xi.T/P))
    a = table.entries[:, 0, :]
    return ReducedStats(aA=_frozen(a @ a.T/P))


def disagreement_counts(table):
    '''
    Number of information states at which each agent's two strategies differ.
    '''
    if table.xi is None:
        raise ValueError('Disagreement counts need a two-strategy table')
    return np.count_nonzero(table.xi, axis=1)
