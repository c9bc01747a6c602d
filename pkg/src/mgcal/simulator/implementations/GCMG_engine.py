"""
Discrete-time Grand Canonical Minority Game.

Speculators (indices 0..N_s-1) trade with probability H(Gamma U_i); producers
trade every step and carry no score. Stream consumption per step: one uniform
from 'mu', N_s uniforms from 'choice'.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from mgcal.game.streams import game_streams
from mgcal.simulator.implementations.MG_engine import BLOCK, draw_mu

ACTIVATIONS = ('prose', 'literal')


@dataclass
class GcmgState:
    scores: np.ndarray
    t: int = 0
    attendance_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    activity_history: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @classmethod
    def initial(cls, config, init_scores=0.0):
        init = np.asarray(init_scores, dtype=float)
        if init.ndim and init.shape != (config.N_s,):
            raise ValueError(f'init_scores of shape {init.shape} does not fit {config.N_s} speculators')
        scores = np.zeros(config.N)
        scores[:config.N_s] += init
        return cls(scores=scores)

    def y(self, gamma):
        return gamma*self.scores


def activation_probability(scores, gamma, activation='prose'):
    '''
    'prose':   1/(1 + exp(-Gamma U)), larger score, more trading
    'literal': 1/(1 + exp(+Gamma U)), the displayed formula read as printed
    '''
    if activation not in ACTIVATIONS:
        raise ValueError(f'Please provide a valid activation convention {ACTIVATIONS}')
    x = gamma*np.asarray(scores, dtype=float)
    return expit(x) if activation == 'prose' else expit(-x)


def heaviside(y, activation='prose'):
    return activation_probability(y, 1.0, activation)


def _play(scores, a_mu, N_s, gamma, P, epsilon, u_choice, activation):
    active = np.ones(len(a_mu), dtype=bool)
    if N_s:
        active[:N_s] = u_choice < activation_probability(scores[:N_s], gamma, activation)
    B = float((a_mu*active).sum())
    if N_s:
        scores[:N_s] -= a_mu[:N_s]*(B/P) + epsilon/P
    return B, int(active.sum())


def gcmg_step(state, table, config, streams, activation='prose'):
    mu = draw_mu(streams['mu'].random(), config.P)
    u_choice = streams['choice'].random(config.N_s)
    scores = state.scores.copy()
    B, n_act = _play(scores, table.entries[:, 0, mu], config.N_s, config.gamma, config.P,
                     config.epsilon, u_choice, activation)
    new_state = GcmgState(scores=scores, t=state.t + 1,
                          attendance_history=np.append(state.attendance_history, B),
                          activity_history=np.append(state.activity_history, n_act))
    return new_state, B, mu


def run_gcmg(config, table, n_steps, state=None, streams=None, init_scores=0.0,
             activation='prose', record_speculators=False):
    if config.kind != 'GCMG':
        raise ValueError('run_gcmg needs a GCMG configuration')
    if activation not in ACTIVATIONS:
        raise ValueError(f'Please provide a valid activation convention {ACTIVATIONS}')
    if streams is None:
        streams = game_streams(config.seed)
    if state is None:
        state = GcmgState.initial(config, init_scores)
    N_s, P, gamma, eps = config.N_s, config.P, config.gamma, config.epsilon
    by_mu = np.ascontiguousarray(table.entries[:, 0, :].T)
    scores = state.scores.copy()

    attendance = np.empty(n_steps)
    activity = np.empty(n_steps, dtype=np.int64)
    mus = np.empty(n_steps, dtype=np.int64)
    spec_active = np.empty(n_steps) if record_speculators else None
    done = 0
    while done < n_steps:
        k = min(BLOCK, n_steps - done)
        u_mu = streams['mu'].random(k)
        u_choice = streams['choice'].random((k, N_s))
        for j in range(k):
            mu = draw_mu(u_mu[j], P)
            mus[done + j] = mu
            B, n_act = _play(scores, by_mu[mu], N_s, gamma, P, eps, u_choice[j], activation)
            attendance[done + j] = B
            activity[done + j] = n_act
            if record_speculators:
                spec_active[done + j] = (n_act - config.N_p)/max(N_s, 1)
        done += k

    final = GcmgState(scores=scores, t=state.t + n_steps)
    out = {'attendance': attendance, 'mu': mus, 'activity': activity, 'state': final}
    if record_speculators:
        out['speculator_activity'] = spec_active
    return out


def producers_only_sigma(table, config):
    '''
    sigma^2_N of the game with every speculator inactive:
    (1/(P w^2)) sum_mu (sum_{producers} a_i^mu)^2
    '''
    a = table.entries[config.N_s:, 0, :]
    B_mu = a.sum(axis=0)
    return float((B_mu**2).sum()/(config.P*config.w**2))
