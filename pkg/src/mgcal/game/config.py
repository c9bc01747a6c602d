"""
GameConfig: the full parameterization of a Minority Game (MG) or Grand
Canonical Minority Game (GCMG) instance, and its flat key-value file format.
"""

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from mgcal.game.streams import check_seed

KINDS = ('MG', 'GCMG')

_FIELDS = ('kind', 'N', 'P', 'M', 'gamma', 'w', 'epsilon', 'N_s', 'N_p', 'seed')


def _integral(name, value):
    try:
        as_int = int(value)
    except (TypeError, ValueError, OverflowError):
        raise ValueError(f'{name} should be an integer, got {value!r}') from None
    if as_int != value:
        raise ValueError(f'{name} should be an integer, got {value!r}')
    return as_int


@dataclass(frozen=True)
class GameConfig:
    '''
    kind:     'MG' (two strategies per agent) or 'GCMG' (one strategy, may abstain)
    N:        number of agents
    P:        number of information states; use GameConfig.from_memory for P = 2**M
    gamma:    learning rate Gamma (finite)
    w:        strategy weight, the inverse-liquidity parameter
    epsilon:  speculator threshold (GCMG only)
    N_s, N_p: speculators and producers (GCMG only), N_s + N_p = N
    seed:     root seed of every random substream
    M:        memory, recorded when P was given as 2**M
    '''
    kind: str
    N: int
    P: int
    gamma: float = 1.0
    w: float = 1.0
    epsilon: float = 0.0
    N_s: int = 0
    N_p: int = 0
    seed: int = 0
    M: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f'Please provide a valid game kind {KINDS}, got {self.kind!r}')
        for name in ('N', 'P', 'N_s', 'N_p'):
            object.__setattr__(self, name, _integral(name, getattr(self, name)))
        if self.M is not None:
            object.__setattr__(self, 'M', _integral('M', self.M))
        if self.N < 1:
            raise ValueError(f'Number of agents N should be >= 1, got {self.N}')
        if self.P < 1:
            raise ValueError(f'Number of information states P should be >= 1, got {self.P}')
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f'Learning rate gamma should be finite and > 0, got {self.gamma}')
        if not (math.isfinite(self.w) and self.w > 0):
            raise ValueError(f'Strategy weight w should be finite and > 0, got {self.w}')
        if not math.isfinite(self.epsilon):
            raise ValueError('Threshold epsilon should be finite; producers are flagged through N_p')
        if self.M is not None and 2**self.M != self.P:
            raise ValueError(f'P = {self.P} does not match memory M = {self.M}')
        if self.kind == 'GCMG':
            if self.N_s < 0 or self.N_p < 0:
                raise ValueError('Speculator and producer counts should be non-negative')
            if self.N_s + self.N_p != self.N:
                raise ValueError(f'N_s + N_p should equal N ({self.N_s} + {self.N_p} != {self.N})')
        object.__setattr__(self, 'seed', check_seed(self.seed))

    @classmethod
    def from_memory(cls, kind, N, M, **kwargs):
        M = _integral('M', M)
        return cls(kind=kind, N=N, P=2**M, M=M, **kwargs)

    @classmethod
    def gcmg(cls, N_s, N_p, P, **kwargs):
        return cls(kind='GCMG', N=N_s + N_p, P=P, N_s=N_s, N_p=N_p, **kwargs)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def S(self):
        return 2 if self.kind == 'MG' else 1

    @property
    def alpha(self):
        return self.P/self.N

    @property
    def n_s(self):
        return self.N_s/self.P

    @property
    def n_p(self):
        return self.N_p/self.P

    @property
    def alpha_ns(self):
        if self.kind != 'GCMG':
            raise ValueError('alpha_ns is defined for the GCMG only')
        return 1.0/(self.n_s + self.n_p)

    @property
    def L(self):
        return self.P*self.N_s

    @property
    def control(self):
        return self.alpha if self.kind == 'MG' else self.alpha_ns

    @property
    def control_name(self):
        return 'alpha' if self.kind == 'MG' else 'alpha_ns'

    @property
    def producer_mask(self):
        # speculators occupy indices 0..N_s-1, producers the rest
        mask = np.zeros(self.N, dtype=bool)
        if self.kind == 'GCMG':
            mask[self.N_s:] = True
        return mask

    def to_dict(self):
        return {name: getattr(self, name) for name in _FIELDS}

    def to_text(self):
        lines = ['# mgcal game configuration']
        for name in _FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            lines.append(f'{name} = {value!r}' if isinstance(value, float) else f'{name} = {value}')
        return '\n'.join(lines) + '\n'


def _convert(name, raw):
    if name == 'kind':
        return raw.strip().upper()
    if name in ('N', 'P', 'M', 'N_s', 'N_p', 'seed'):
        return int(raw)
    return float(raw)


def parse_config(text, **overrides):
    '''
    Parse the flat `key = value` format. Unknown keys are rejected; missing
    keys take the GameConfig defaults (gamma = 1.0, w = 1.0).
    '''
    parser = configparser.ConfigParser(inline_comment_prefixes=('#',))
    parser.optionxform = str
    parser.read_string('[game]\n' + text)
    values = {}
    for key, raw in parser.items('game'):
        if key not in _FIELDS:
            raise ValueError(f'Unknown configuration key {key!r}')
        try:
            values[key] = _convert(key, raw)
        except ValueError:
            raise ValueError(f'Configuration key {key!r} has invalid value {raw!r}') from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    if 'M' in values and 'P' not in values:
        values['P'] = 2**values['M']
    for required in ('kind', 'N', 'P'):
        if required not in values:
            raise ValueError(f'Configuration is missing required key {required!r}')
    return GameConfig(**values)


def load_config(path, **overrides):
    with open(path, 'r', encoding='utf-8') as fh:
        return parse_config(fh.read(), **overrides)


def save_config(config, path):
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(config.to_text())
