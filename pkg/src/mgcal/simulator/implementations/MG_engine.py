"""
Discrete-time Minority Game with finite learning rate and random information.

Per step: mu is drawn from the 'mu' stream as floor(u*P) with one uniform, and
each agent's choice uses one uniform from the 'choice' stream (N per step).
Both the step function and the block runner consume the streams identically.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from mgcal.game.streams import game_streams

BLOCK = 4096


@dataclass
class MgState:
    '''
    scores: (N, 2) array of (U_+, U_-) per agent
    '''
    scores: np.ndarray
    t: int = 0
    attendance_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def initial(cls, config, init_scores=0.0):
        '''
        init_scores is the initial score difference U_+ - U_-, a scalar or one
        value per agent, split symmetrically over the two columns. An (N, 2)
        array is taken as the scores themselves.
        '''
        init = np.asarray(init_scores, dtype=float)
        scores = np.zeros((config.N, 2))
        if init.shape == (config.N, 2):
            scores += init
        elif init.ndim == 0 or init.shape == (config.N,):
            scores[:, 0] += init/2
            scores[:, 1] -= init/2
        else:
            raise ValueError(f'init_scores of shape {init.shape} does not fit {config.N} agents')
        return cls(scores=scores)

    def y(self, gamma):
        return gamma*(self.scores[:, 0] - self.scores[:, 1])/2


def choice_probabilities(scores, gamma):
    '''
    Softmax over the two strategies; (N, 2) with columns (+, -).
    '''
    z = gamma*np.asarray(scores, dtype=float)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e/e.sum(axis=1, keepdims=True)


def draw_mu(u, P):
    return min(int(u*P), P - 1)


def _play(scores, entries_mu, gamma, P, u_choice):
    # two-strategy softmax in its overflow-safe logistic form
    p_plus = expit(gamma*(scores[:, 0] - scores[:, 1]))
    actions = np.where(u_choice < p_plus, entries_mu[:, 0], entries_mu[:, 1])
    B = float(actions.sum())
    scores -= entries_mu*(B/P)
    return B


def mg_step(state, table, config, streams):
    mu = draw_mu(streams['mu'].random(), config.P)
    u_choice = streams['choice'].random(config.N)
    scores = state.scores.copy()
    B = _play(scores, table.entries[:, :, mu], config.gamma, config.P, u_choice)
    new_state = MgState(scores=scores, t=state.t + 1,
                        attendance_history=np.append(state.attendance_history, B))
    return new_state, B, mu


def run_mg(config, table, n_steps, state=None, streams=None, init_scores=0.0):
    '''
    Run n_steps of the game and return attendance and information sequences.
    The returned state does not carry the attendance history of this run.
    '''
    if config.kind != 'MG':
        raise ValueError('run_mg needs an MG configuration')
    if streams is None:
        streams = game_streams(config.seed)
    if state is None:
        state = MgState.initial(config, init_scores)
    N, P, gamma = config.N, config.P, config.gamma
    by_mu = np.ascontiguousarray(np.moveaxis(table.entries, 2, 0))
    scores = state.scores.copy()

    attendance = np.empty(n_steps)
    mus = np.empty(n_steps, dtype=np.int64)
    done = 0
    while done < n_steps:
        k = min(BLOCK, n_steps - done)
        u_mu = streams['mu'].random(k)
        u_choice = streams['choice'].random((k, N))
        for j in range(k):
            mu = draw_mu(u_mu[j], P)
            mus[done + j] = mu
            attendance[done + j] = _play(scores, by_mu[mu], gamma, P, u_choice[j])
        done += k

    final = MgState(scores=scores, t=state.t + n_steps)
    return {'attendance': attendance, 'mu': mus, 'state': final}
